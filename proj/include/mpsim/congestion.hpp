#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mpsim/rng.hpp"
#include "mpsim/subflow.hpp"

namespace mpsim {

// One controller per connection; coupled algorithms see every subflow.
class CongestionController {
 public:
  virtual ~CongestionController() = default;
  virtual std::string_view name() const = 0;

  void bind(std::vector<SubflowState*> subs, TimeNs now);
  std::size_t size() const { return subs_.size(); }
  SubflowState& sub(int r) { return *subs_[r]; }
  const SubflowState& sub(int r) const { return *subs_[r]; }

  virtual void init(int r, TimeNs now);
  virtual void onAck(int r, const AckInfo& info);
  virtual void onRto(int r, TimeNs now, bool head_already_resent);
  virtual void onTransmit(int /*r*/, TimeNs /*now*/) {}

  virtual bool paced() const { return false; }
  // Payload bytes per second.
  virtual double pacingRate(int /*r*/) const { return 0; }
  // True while the controller deliberately sends below its measured capacity.
  virtual bool rateCapped(int /*r*/) const { return false; }

 protected:
  // Growth on an advancing ACK outside recovery.
  virtual void increase(int r, const AckInfo& info);
  // Loss reaction entering fast recovery; returns the new ssthresh.
  virtual double onLoss(int r, const AckInfo& info);
  virtual void onTimeout(int /*r*/, TimeNs /*now*/) {}

  std::vector<SubflowState*> subs_;
};

class RenoController : public CongestionController {
 public:
  std::string_view name() const override { return "reno"; }
};

struct CcOptions {
  std::uint64_t seed = 0;
};

const std::vector<std::string>& ccaNames();
// Throws RangeError for unknown names.
std::unique_ptr<CongestionController> makeController(std::string_view name, const CcOptions& opts);

}  // namespace mpsim
