#include "reachlab/errors.hpp"

#include <sstream>

namespace reachlab {

namespace {

std::string summarize(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << "model validation failed (" << violations.size() << " violation"
     << (violations.size() == 1 ? "" : "s") << ")";
  for (const auto& v : violations) os << "\n  " << v.message;
  return os.str();
}

std::string describe_calibration(double target, double low, double high) {
  std::ostringstream os;
  os.precision(10);
  os << "cannot calibrate chain to outcome probability " << target
     << "; achievable interval is [" << low << ", " << high << "]";
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(summarize(violations)), violations_(std::move(violations)) {}

CalibrationFailure::CalibrationFailure(double target, double achievable_low,
                                       double achievable_high)
    : Error(describe_calibration(target, achievable_low, achievable_high)),
      target_(target),
      low_(achievable_low),
      high_(achievable_high) {}

}  // namespace reachlab
