#pragma once

#include <span>
#include <vector>

#include "mpsim/congestion.hpp"

namespace mpsim {

namespace coupled {

struct PathView {
  double w = 0;    // window; unit chosen by the caller
  double rtt = 0;  // seconds
};

double liaAlpha(std::span<const PathView> paths);
// All window quantities in bytes.
double liaIncrease(double alpha, double cwnd_total, double cwnd_i, double bytes_acked, double mss);

struct OliaPath {
  double w = 0;  // packets
  double rtt = 0;
  double inter_loss_bytes = 0;
};

// Increase parameters a_r for every path.
std::vector<double> oliaA(std::span<const OliaPath> paths);
// Per-ACK increase in packets.
double oliaIncrease(std::span<const OliaPath> paths, std::size_t r, double a_r);

// Windows in packets.
double baliaA(std::span<const PathView> paths, std::size_t r);
double baliaIncrease(std::span<const PathView> paths, std::size_t r);
double baliaDecrease(std::span<const PathView> paths, std::size_t r);

}  // namespace coupled

class CoupledBase : public CongestionController {
 protected:
  // Paths with an RTT estimate; index map into subflow slots.
  std::vector<coupled::PathView> pathViews(bool in_packets, std::vector<int>& slots) const;
};

class LiaController : public CoupledBase {
 public:
  std::string_view name() const override { return "lia"; }
  void init(int r, TimeNs now) override;
  double cachedAlpha() const { return alpha_; }

 protected:
  void increase(int r, const AckInfo& info) override;
  double onLoss(int r, const AckInfo& info) override;
  void onTimeout(int r, TimeNs now) override;

 private:
  double alpha_ = 1;
  TimeNs alpha_stamp_ = 0;
  bool alpha_dirty_ = true;
};

class OliaController : public CoupledBase {
 public:
  std::string_view name() const override { return "olia"; }
  void init(int r, TimeNs now) override;
  const std::vector<double>& cachedA() const { return a_; }

 protected:
  void increase(int r, const AckInfo& info) override;
  double onLoss(int r, const AckInfo& info) override;
  void onTimeout(int r, TimeNs now) override;

 private:
  void recompute();
  struct LossBytes {
    double between_losses = 0;
    double since_loss = 0;
  };
  std::vector<LossBytes> loss_;
  std::vector<double> a_;
  TimeNs a_stamp_ = 0;
  bool a_dirty_ = true;
};

class BaliaController : public CoupledBase {
 public:
  std::string_view name() const override { return "balia"; }

 protected:
  void increase(int r, const AckInfo& info) override;
  double onLoss(int r, const AckInfo& info) override;
};

}  // namespace mpsim
