#include "spinsq/errors.hpp"

namespace spinsq {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSize: return "InvalidSize";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::IsotropicCoupling: return "IsotropicCoupling";
    case ErrorKind::AsymmetricInput: return "AsymmetricInput";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::MeanSpinVanished: return "MeanSpinVanished";
    case ErrorKind::NoMinimumFound: return "NoMinimumFound";
    case ErrorKind::XAxisImpossible: return "XAxisImpossible";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Io: return 3;
    case ErrorKind::InvalidArgument: return 4;
    case ErrorKind::InvalidSize: return 10;
    case ErrorKind::InvalidLabel: return 11;
    case ErrorKind::IsotropicCoupling: return 12;
    case ErrorKind::AsymmetricInput: return 13;
    case ErrorKind::InvalidModel: return 14;
    case ErrorKind::DimensionMismatch: return 15;
    case ErrorKind::NotHermitian: return 16;
    case ErrorKind::TooLarge: return 17;
    case ErrorKind::MeanSpinVanished: return 18;
    case ErrorKind::NoMinimumFound: return 19;
    case ErrorKind::XAxisImpossible: return 20;
  }
  return 1;
}

}  // namespace spinsq
