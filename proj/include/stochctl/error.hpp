// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stochctl {

enum class ErrorCode {
  DegenerateInput,
  NonCompactManifold,
  ParseError,
  RankCollapse,
  NumericalBlowup,
  UnknownScenario,
  BadParams,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NonCompactManifold: return "NonCompactManifold";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RankCollapse: return "RankCollapse";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Base exception for every failure the library reports. The code is stable
/// and is what the CLI prints in its diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the torus field expression parser.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, std::string expected, std::string_view source)
      : Error(ErrorCode::ParseError,
              "at position " + std::to_string(position) + ": expected " + expected +
                  " in \"" + std::string(source) + "\""),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

}  // namespace stochctl
