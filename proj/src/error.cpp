#include "iib/error.hpp"

namespace iib {

const char* errc_name(errc c) {
  switch (c) {
    case errc::dimension_mismatch: return "dimension-mismatch";
    case errc::non_finite_sample: return "non-finite-sample";
    case errc::band_out_of_range: return "band-out-of-range";
    case errc::shape_mismatch: return "shape-mismatch";
    case errc::too_few_samples: return "too-few-samples";
    case errc::too_few_bands: return "too-few-bands";
    case errc::non_divisible_dimensions: return "non-divisible-dimensions";
    case errc::geometry_mismatch: return "geometry-mismatch";
    case errc::degenerate_window: return "degenerate-window";
    case errc::all_windows_degenerate: return "all-windows-degenerate";
    case errc::all_pixels_degenerate: return "all-pixels-degenerate";
    case errc::zero_mean_reference_band: return "zero-mean-reference-band";
    case errc::out_of_range: return "out-of-range";
    case errc::invalid_argument: return "invalid-argument";
    case errc::invalid_architecture: return "invalid-architecture";
    case errc::architecture_mismatch: return "architecture-mismatch";
    case errc::bad_magic: return "bad-magic";
    case errc::truncated_file: return "truncated-file";
    case errc::version_unsupported: return "version-unsupported";
    case errc::io_error: return "io-error";
  }
  return "unknown";
}

error::error(errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void fail(errc code, const std::string& message) { throw error(code, message); }

}  // namespace iib
