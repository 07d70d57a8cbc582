#include "mpsim/coupled.hpp"

#include <algorithm>

#include "mpsim/reno.hpp"

namespace mpsim {

namespace coupled {

double liaAlpha(std::span<const PathView> paths) {
  double total = 0, best = 0, sum = 0;
  for (const PathView& p : paths) {
    total += p.w;
    best = std::max(best, p.w / (p.rtt * p.rtt));
    sum += p.w / p.rtt;
  }
  return total * best / (sum * sum);
}

double liaIncrease(double alpha, double cwnd_total, double cwnd_i, double bytes_acked, double mss) {
  return std::min(alpha * bytes_acked * mss / cwnd_total, bytes_acked * mss / cwnd_i);
}

std::vector<double> oliaA(std::span<const OliaPath> paths) {
  const std::size_t n = paths.size();
  std::vector<double> a(n, 0.0);
  if (n == 0) return a;
  double max_w = 0, best_q = -1;
  for (const OliaPath& p : paths) {
    max_w = std::max(max_w, p.w);
    best_q = std::max(best_q, p.inter_loss_bytes / (p.rtt * p.rtt));
  }
  std::vector<bool> in_m(n), in_b(n);
  std::size_t m_count = 0, collected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    in_m[i] = paths[i].w == max_w;
    in_b[i] = paths[i].inter_loss_bytes / (paths[i].rtt * paths[i].rtt) == best_q;
    m_count += in_m[i];
  }
  for (std::size_t i = 0; i < n; ++i) collected += in_b[i] && !in_m[i];
  if (collected == 0) return a;
  const double share = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (in_b[i] && !in_m[i])
      a[i] = share / static_cast<double>(collected);
    else if (in_m[i])
      a[i] = -share / static_cast<double>(m_count);
  }
  return a;
}

double oliaIncrease(std::span<const OliaPath> paths, std::size_t r, double a_r) {
  double sum = 0;
  for (const OliaPath& p : paths) sum += p.w / p.rtt;
  const OliaPath& pr = paths[r];
  return (pr.w / (pr.rtt * pr.rtt)) / (sum * sum) + a_r / pr.w;
}

double baliaA(std::span<const PathView> paths, std::size_t r) {
  double max_x = 0;
  for (const PathView& p : paths) max_x = std::max(max_x, p.w / p.rtt);
  return max_x / (paths[r].w / paths[r].rtt);
}

double baliaIncrease(std::span<const PathView> paths, std::size_t r) {
  double sum = 0;
  for (const PathView& p : paths) sum += p.w / p.rtt;
  const double x = paths[r].w / paths[r].rtt;
  const double a = baliaA(paths, r);
  return x / (paths[r].rtt * sum * sum) * ((1 + a) / 2) * ((4 + a) / 5);
}

double baliaDecrease(std::span<const PathView> paths, std::size_t r) {
  return paths[r].w / 2 * std::min(baliaA(paths, r), 1.5);
}

}  // namespace coupled

namespace {

double rttSeconds(const SubflowState& s) { return toSeconds(s.srtt); }

bool usable(const SubflowState& s) { return !s.closed && s.has_rtt && s.srtt > 0; }

int slotOf(const std::vector<int>& slots, int r) {
  auto it = std::find(slots.begin(), slots.end(), r);
  return it == slots.end() ? -1 : static_cast<int>(it - slots.begin());
}

}  // namespace

std::vector<coupled::PathView> CoupledBase::pathViews(bool in_packets, std::vector<int>& slots) const {
  std::vector<coupled::PathView> v;
  slots.clear();
  for (int i = 0; i < static_cast<int>(size()); ++i) {
    const SubflowState& s = sub(i);
    if (!usable(s)) continue;
    v.push_back({in_packets ? s.cwnd / s.smss : s.cwnd, rttSeconds(s)});
    slots.push_back(i);
  }
  return v;
}

void LiaController::init(int r, TimeNs now) {
  CongestionController::init(r, now);
  alpha_dirty_ = true;
}

void LiaController::increase(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  if (s.cwnd < s.ssthresh) {
    CongestionController::increase(r, info);
    return;
  }
  std::vector<int> slots;
  const auto paths = pathViews(false, slots);
  if (slotOf(slots, r) < 0) {
    CongestionController::increase(r, info);
    return;
  }
  if (alpha_dirty_ || info.now - alpha_stamp_ >= s.srtt) {
    alpha_ = coupled::liaAlpha(paths);
    alpha_stamp_ = info.now;
    alpha_dirty_ = false;
  }
  double total = 0;
  for (const auto& p : paths) total += p.w;
  s.cwnd += coupled::liaIncrease(alpha_, total, s.cwnd, static_cast<double>(info.newly_acked), s.smss);
}

double LiaController::onLoss(int r, const AckInfo& /*info*/) {
  alpha_dirty_ = true;
  const SubflowState& s = sub(r);
  return std::max(s.cwnd / 2, 2 * s.smss);
}

void LiaController::onTimeout(int /*r*/, TimeNs /*now*/) { alpha_dirty_ = true; }

void OliaController::init(int r, TimeNs now) {
  CongestionController::init(r, now);
  if (loss_.size() < size()) loss_.resize(size());
  loss_[r] = {};
  a_dirty_ = true;
}

void OliaController::recompute() {
  std::vector<coupled::OliaPath> paths;
  std::vector<int> slots;
  for (int i = 0; i < static_cast<int>(size()); ++i) {
    const SubflowState& s = sub(i);
    if (!usable(s)) continue;
    paths.push_back({s.cwnd / s.smss, rttSeconds(s), std::max(loss_[i].between_losses, loss_[i].since_loss)});
    slots.push_back(i);
  }
  const auto a = coupled::oliaA(paths);
  a_.assign(size(), 0.0);
  for (std::size_t k = 0; k < slots.size(); ++k) a_[slots[k]] = a[k];
}

void OliaController::increase(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  loss_[r].since_loss += static_cast<double>(info.newly_acked);
  if (s.cwnd < s.ssthresh) {
    CongestionController::increase(r, info);
    return;
  }
  std::vector<coupled::OliaPath> paths;
  std::vector<int> slots;
  for (int i = 0; i < static_cast<int>(size()); ++i) {
    const SubflowState& si = sub(i);
    if (!usable(si)) continue;
    paths.push_back({si.cwnd / si.smss, rttSeconds(si), std::max(loss_[i].between_losses, loss_[i].since_loss)});
    slots.push_back(i);
  }
  const int slot = slotOf(slots, r);
  if (slot < 0) {
    CongestionController::increase(r, info);
    return;
  }
  if (a_dirty_ || info.now - a_stamp_ >= s.srtt) {
    recompute();
    a_stamp_ = info.now;
    a_dirty_ = false;
  }
  const double inc = coupled::oliaIncrease(paths, static_cast<std::size_t>(slot), a_[r]);
  s.cwnd = std::max(s.cwnd + inc * static_cast<double>(info.newly_acked), s.smss);
}

double OliaController::onLoss(int r, const AckInfo& /*info*/) {
  loss_[r].between_losses = loss_[r].since_loss;
  loss_[r].since_loss = 0;
  a_dirty_ = true;
  const SubflowState& s = sub(r);
  return std::max(s.cwnd / 2, 2 * s.smss);
}

void OliaController::onTimeout(int r, TimeNs /*now*/) {
  loss_[r].between_losses = loss_[r].since_loss;
  loss_[r].since_loss = 0;
  a_dirty_ = true;
}

void BaliaController::increase(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  std::vector<int> slots;
  const auto paths = pathViews(true, slots);
  const int slot = slotOf(slots, r);
  if (s.cwnd < s.ssthresh || slot < 0) {
    CongestionController::increase(r, info);
    return;
  }
  s.cwnd += coupled::baliaIncrease(paths, static_cast<std::size_t>(slot)) * static_cast<double>(info.newly_acked);
}

double BaliaController::onLoss(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  std::vector<int> slots;
  const auto paths = pathViews(true, slots);
  const int slot = slotOf(slots, r);
  if (slot < 0) return CongestionController::onLoss(r, info);
  const double w = s.cwnd / s.smss - coupled::baliaDecrease(paths, static_cast<std::size_t>(slot));
  return std::max(w * s.smss, 2 * s.smss);
}

}  // namespace mpsim
