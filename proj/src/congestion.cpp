#include "mpsim/congestion.hpp"

#include <algorithm>

#include "mpsim/bbr.hpp"
#include "mpsim/coupled.hpp"
#include "mpsim/cubic.hpp"
#include "mpsim/error.hpp"
#include "mpsim/reno.hpp"
#include "mpsim/wvegas.hpp"

namespace mpsim {

void CongestionController::bind(std::vector<SubflowState*> subs, TimeNs now) {
  subs_ = std::move(subs);
  for (int r = 0; r < static_cast<int>(subs_.size()); ++r) init(r, now);
}

void CongestionController::init(int r, TimeNs /*now*/) {
  SubflowState& s = sub(r);
  s.cwnd = reno::initialWindow(s.smss);
  s.ssthresh = kInfiniteSsthresh;
}

void CongestionController::increase(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  s.cwnd = reno::ackCwnd(s.cwnd, s.ssthresh, static_cast<double>(info.newly_acked), s.smss);
}

double CongestionController::onLoss(int r, const AckInfo& /*info*/) {
  const SubflowState& s = sub(r);
  return reno::lossSsthresh(static_cast<double>(s.flight_size), s.smss);
}

void CongestionController::onAck(int r, const AckInfo& info) {
  SubflowState& s = sub(r);
  switch (info.kind) {
    case AckKind::Advance:
      increase(r, info);
      break;
    case AckKind::PartialAdvance: {
      const double newly = static_cast<double>(info.newly_acked);
      s.cwnd = std::max(s.cwnd - newly + (newly >= s.smss ? s.smss : 0.0), s.smss);
      break;
    }
    case AckKind::RecoveryExit:
      s.cwnd = s.ssthresh;
      break;
    case AckKind::DupAckInRecovery:
      s.cwnd += s.smss;
      break;
    case AckKind::EnterRecovery:
      s.ssthresh = onLoss(r, info);
      s.cwnd = reno::recoveryCwnd(s.ssthresh, s.smss);
      break;
    case AckKind::DupAck:
    case AckKind::Stale:
      break;
  }
}

void CongestionController::onRto(int r, TimeNs now, bool head_already_resent) {
  SubflowState& s = sub(r);
  if (!head_already_resent && !s.in_fast_recovery) s.ssthresh = reno::lossSsthresh(static_cast<double>(s.flight_size), s.smss);
  s.cwnd = reno::timeoutCwnd(s.smss);
  onTimeout(r, now);
}

const std::vector<std::string>& ccaNames() {
  static const std::vector<std::string> names{"cubic", "lia", "olia", "balia", "wvegas", "bbr", "cmpbbr"};
  return names;
}

std::unique_ptr<CongestionController> makeController(std::string_view name, const CcOptions& opts) {
  if (name == "reno") return std::make_unique<RenoController>();
  if (name == "cubic") return std::make_unique<CubicController>();
  if (name == "lia") return std::make_unique<LiaController>();
  if (name == "olia") return std::make_unique<OliaController>();
  if (name == "balia") return std::make_unique<BaliaController>();
  if (name == "wvegas") return std::make_unique<WvegasController>();
  if (name == "bbr") return std::make_unique<BbrController>(opts.seed, false);
  if (name == "cmpbbr") return std::make_unique<BbrController>(opts.seed, true);
  throw RangeError("unknown congestion control '" + std::string(name) + "'");
}

}  // namespace mpsim
