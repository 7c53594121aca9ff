#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "lhbd/autograd.hpp"
#include "lhbd/sequence_io.hpp"

namespace lhbd {

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over all channels; +inf for identical frames.
double psnr(const Frame& a, const Frame& b);
double psnr_from_mse(double mse);

struct MsSsimOptions {
  int window = 11;
  double sigma = 1.5;
  std::vector<double> weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
};

/// Number of scales used for an input whose smaller side is `min_side`:
/// the largest S <= weights.size() with floor(min_side / 2^(S-1)) >= window.
/// Throws std::invalid_argument when not even one scale fits.
int ms_ssim_scales(int min_side, const MsSsimOptions& opt = {});

/// Differentiable MS-SSIM averaged over batch and channels (inputs in [0,1]).
ag::Var ms_ssim(const ag::Var& a, const ag::Var& b, const MsSsimOptions& opt = {});
double ms_ssim(const Frame& a, const Frame& b, const MsSsimOptions& opt = {});

// ---------------------------------------------------------------------------
// Rate-distortion curves

struct RDPoint {
  std::string label;
  double bpp = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
};

enum class Quality { psnr, msssim };
enum class BdFit { pchip, cubic_poly };

struct RDCurve {
  std::string name;
  std::vector<RDPoint> points;

  [[nodiscard]] RDCurve sorted() const;
  /// Indices i where quality drops from point i-1 to i (by increasing bpp).
  [[nodiscard]] std::vector<std::size_t> monotonicity_violations(Quality q = Quality::psnr) const;
};

/// Bjontegaard delta rate of `test` against `anchor` in percent; negative means
/// the test curve needs less rate for the same quality. MS-SSIM quality is
/// used in the -10 log10(1 - msssim) dB domain.
double bd_rate(const RDCurve& test, const RDCurve& anchor, Quality q = Quality::psnr, BdFit fit = BdFit::pchip);

struct BdResult {
  double pchip = 0.0;
  double poly = 0.0;
  /// True when the two fits disagree by more than 0.5 percentage points.
  [[nodiscard]] bool disagree() const;
};
BdResult bd_rate_both(const RDCurve& test, const RDCurve& anchor, Quality q = Quality::psnr);

// ---------------------------------------------------------------------------
// Logs and reports

struct FrameLog {
  int frame = 0;
  int level = 0;  // 0 for keyframes
  double bpp_image = 0.0;
  double bpp_motion = 0.0;
  double bpp_residual = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;

  [[nodiscard]] double bpp() const { return bpp_image + bpp_motion + bpp_residual; }
};

std::string to_json_line(const FrameLog& log);
FrameLog frame_log_from_json(const std::string& line);

/// Frame-averaged PSNR/MS-SSIM and total bpp of one coded sequence.
RDPoint summarize(const std::vector<FrameLog>& frames, const std::string& label);

/// Anchor CSV with header quality_label,bpp,psnr,msssim.
RDCurve read_anchor_csv(const std::filesystem::path& path);
void write_rd_csv(const std::vector<RDCurve>& curves, const std::filesystem::path& path);
void write_gop_profile_csv(const std::vector<FrameLog>& frames, const std::filesystem::path& path);
/// Static line plot of bpp vs quality for every curve.
std::string rd_plot_svg(const std::vector<RDCurve>& curves, Quality q = Quality::psnr);
/// Bar chart of per-frame bpp (stacked image/motion/residual) in display order.
std::string gop_profile_svg(const std::vector<FrameLog>& frames);

struct AblationRow {
  std::string toggle;
  double bd_rate_psnr = 0.0;  // on-arm vs off-arm, pchip fit
  double bd_rate_poly = 0.0;
  double decode_seconds_on = 0.0;
  double decode_seconds_off = 0.0;
};
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

/// Description of the MS-SSIM conventions, stamped into every report.
std::string metric_conventions(const MsSsimOptions& opt = {});

}  // namespace lhbd
