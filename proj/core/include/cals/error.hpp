#pragma once

#include <stdexcept>
#include <string>

namespace cals
{
  /// Base of every exception thrown by the library.
  class Error : public std::runtime_error
  {
  public:
    explicit Error(const std::string &what) : std::runtime_error(what) {}
    /// Stable machine-readable category, used by the CLI error reports.
    [[nodiscard]] virtual const char *kind() const noexcept { return "error"; }
  };

  /// Operand shapes do not conform (mismatched rows, columns, or extents).
  class DimensionError : public Error
  {
  public:
    using Error::Error;
    [[nodiscard]] const char *kind() const noexcept override { return "dimension"; }
  };

  /// Invalid user configuration (rank larger than R*, bad tolerance, ...).
  class ConfigError : public Error
  {
  public:
    using Error::Error;
    [[nodiscard]] const char *kind() const noexcept override { return "config"; }
  };

  /// NaN/Inf in inputs or a failed factorization with no fallback.
  class NumericalError : public Error
  {
  public:
    using Error::Error;
    [[nodiscard]] const char *kind() const noexcept override { return "numerical"; }
  };

  /// Malformed tensor or results file.
  class FormatError : public Error
  {
  public:
    using Error::Error;
    [[nodiscard]] const char *kind() const noexcept override { return "format"; }
  };
} // namespace cals
