#include "mpsim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mpsim/error.hpp"

namespace mpsim {

double goodputMbps(double bytes, double duration_s) {
  if (duration_s <= 0) throw RangeError("duration must be positive");
  return bytes * 8 / (duration_s * 1024 * 1024);
}

double packetsPerSecond(double total_bytes, double mss, double duration_s) {
  if (total_bytes <= 0) throw ZeroBytes("no bytes delivered");
  return total_bytes / (mss * duration_s);
}

double perPacketDelayMs(double total_bytes, double mss, double duration_s) {
  return 1000.0 / packetsPerSecond(total_bytes, mss, duration_s);
}

double psScore(const std::vector<double>& avg_gp, std::size_t family_size, double max_gp) {
  if (avg_gp.size() != family_size) throw SizeMismatch("goodput list does not match family size");
  double sum = 0;
  for (double g : avg_gp) sum += g;
  return sum / (static_cast<double>(family_size) * max_gp);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw EmptyInput("mean of empty set");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v, Deviation dev) {
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  if (dev == Deviation::Sample) {
    if (v.size() < 2) return 0;
    return std::sqrt(ss / (n - 1));
  }
  return std::sqrt(ss / n);
}

CcaScore ccaScores(const std::map<std::string, std::map<std::string, double>>& ps,
                   const std::vector<std::string>& schedulers, const std::vector<std::string>& families,
                   Deviation dev) {
  if (schedulers.empty() || families.empty()) throw IncompleteGrid("empty scheduler or family list");
  CcaScore out;
  std::vector<double> fam_scores;
  for (const std::string& fam : families) {
    double sum = 0;
    for (const std::string& s : schedulers) {
      auto it = ps.find(s);
      if (it == ps.end()) throw IncompleteGrid("missing scheduler " + s);
      auto jt = it->second.find(fam);
      if (jt == it->second.end()) throw IncompleteGrid("missing family " + fam + " for " + s);
      sum += jt->second / static_cast<double>(schedulers.size());
    }
    out.per_family[fam] = sum;
    fam_scores.push_back(sum);
  }
  out.score = mean(fam_scores);
  const double sigma = stddev(fam_scores, dev);
  out.cv = out.score != 0 ? sigma / out.score : 0;
  if (out.score != 0 && out.cv != 0) out.overall = out.score / out.cv;
  return out;
}

std::vector<std::pair<double, double>> ecdf(std::vector<double> values) {
  if (values.empty()) throw EmptyInput("ecdf of empty set");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.emplace_back(values[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

std::vector<std::pair<double, double>> eccdf(std::vector<double> values) {
  if (values.empty()) throw EmptyInput("eccdf of empty set");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && values[i - 1] == values[i]) continue;
    out.emplace_back(values[i], static_cast<double>(values.size() - i) / n);
  }
  return out;
}

}  // namespace mpsim
