#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spinsq {

enum class ErrorKind {
  InvalidSize,
  InvalidLabel,
  IsotropicCoupling,
  AsymmetricInput,
  InvalidModel,
  DimensionMismatch,
  NotHermitian,
  TooLarge,
  MeanSpinVanished,
  NoMinimumFound,
  XAxisImpossible,
  InvalidArgument,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Process exit status used by the command-line front end for each category.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace spinsq
