#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mpsim {

// bytes * 8 / (duration * 2^20)
double goodputMbps(double bytes, double duration_s);

// Throws ZeroBytes.
double packetsPerSecond(double total_bytes, double mss = 1514, double duration_s = 30);
double perPacketDelayMs(double total_bytes, double mss = 1514, double duration_s = 30);

// Throws SizeMismatch when the list length differs from the family size.
double psScore(const std::vector<double>& avg_gp, std::size_t family_size, double max_gp = 200);

enum class Deviation { Population, Sample };

struct CcaScore {
  std::map<std::string, double> per_family;
  double score = 0;
  double cv = 0;
  std::optional<double> overall;
};

// ps[scheduler][family] -> scores for one CCA. Throws IncompleteGrid.
CcaScore ccaScores(const std::map<std::string, std::map<std::string, double>>& ps,
                   const std::vector<std::string>& schedulers, const std::vector<std::string>& families,
                   Deviation dev = Deviation::Population);

// Step series over the sorted sample; one point per distinct value. Throw EmptyInput.
std::vector<std::pair<double, double>> ecdf(std::vector<double> values);
std::vector<std::pair<double, double>> eccdf(std::vector<double> values);

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v, Deviation dev = Deviation::Population);

}  // namespace mpsim
