#ifndef LRTCONE_ERROR_HPP_
#define LRTCONE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace lrtcone {

enum class ErrorCode {
  NonSPD,
  DegenerateVariance,
  InvalidProb,
  RankDeficient,
  AllStartsFailed,
  NegativeLRT,
  DegenerateCell,
  NegativeEigen,
  RankDeficientBasis,
  SingularInfo,
  NegativeDraw,
  InvalidArgument,
  ExperimentFailed,
  ConfigError,
};

inline const char *to_string(ErrorCode code);

/*
 * Single exception type for the library; the code lets callers (the CLI in
 * particular) map failures onto exit statuses without string matching.
 */
class LrtError : public std::runtime_error {
public:
  LrtError(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline const char *to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::NonSPD:
    return "NonSPD";
  case ErrorCode::DegenerateVariance:
    return "DegenerateVariance";
  case ErrorCode::InvalidProb:
    return "InvalidProb";
  case ErrorCode::RankDeficient:
    return "RankDeficient";
  case ErrorCode::AllStartsFailed:
    return "AllStartsFailed";
  case ErrorCode::NegativeLRT:
    return "NegativeLRT";
  case ErrorCode::DegenerateCell:
    return "DegenerateCell";
  case ErrorCode::NegativeEigen:
    return "NegativeEigen";
  case ErrorCode::RankDeficientBasis:
    return "RankDeficientBasis";
  case ErrorCode::SingularInfo:
    return "SingularInfo";
  case ErrorCode::NegativeDraw:
    return "NegativeDraw";
  case ErrorCode::InvalidArgument:
    return "InvalidArgument";
  case ErrorCode::ExperimentFailed:
    return "ExperimentFailed";
  case ErrorCode::ConfigError:
    return "ConfigError";
  }
  return "Unknown";
}

} // namespace lrtcone

#endif /* LRTCONE_ERROR_HPP_ */
