#pragma once

#include <stdexcept>
#include <string>

namespace iib {

/// Failure categories raised by the library. The CLI maps them to exit codes.
enum class errc {
  dimension_mismatch,
  non_finite_sample,
  band_out_of_range,
  shape_mismatch,
  too_few_samples,
  too_few_bands,
  non_divisible_dimensions,
  geometry_mismatch,
  degenerate_window,
  all_windows_degenerate,
  all_pixels_degenerate,
  zero_mean_reference_band,
  out_of_range,
  invalid_argument,
  invalid_architecture,
  architecture_mismatch,
  bad_magic,
  truncated_file,
  version_unsupported,
  io_error,
};

const char* errc_name(errc c);

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message);
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] void fail(errc code, const std::string& message);

}  // namespace iib
