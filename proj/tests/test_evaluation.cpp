#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "lhbd/errors.hpp"
#include "lhbd/evaluation.hpp"
#include "lhbd/gradcheck.hpp"
#include "lhbd/ops.hpp"

namespace lhbd {
namespace {

using ag::Var;

Frame textured(int h, int w, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.frames = 1;
  spec.height = h;
  spec.width = w;
  spec.seed = seed;
  return synth_sequence(spec).frames[0];
}

Frame with_noise(const Frame& f, double amplitude, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = f.pixels();
  for (auto& v : t.vec()) v += amplitude * rng.uniform(-1.0, 1.0);
  return Frame::clamped(t);
}

TEST(Psnr, ClosedForms) {
  const Frame a = textured(16, 16, 1);
  EXPECT_EQ(psnr(a, a), kPsnrIdentical);
  Frame lo(8, 8), hi(8, 8);
  for (auto& v : hi.pixels().vec()) v = 0.1;
  EXPECT_NEAR(psnr(lo, hi), 20.0, 1e-12);
  for (auto& v : hi.pixels().vec()) v = 1.0 / 255.0;
  EXPECT_NEAR(psnr(lo, hi), 48.1308036086791, 1e-9);
  EXPECT_THROW(psnr(Frame(8, 8), Frame(8, 9)), std::invalid_argument);
}

// Direct-loop single-channel MS-SSIM written independently of the separable
// matrix machinery.
double oracle_ms_ssim(const Frame& fa, const Frame& fb) {
  const std::vector<double> weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double g[11], gs = 0.0;
  for (int i = 0; i < 11; ++i) gs += g[i] = std::exp(-(i - 5) * (i - 5) / (2 * 1.5 * 1.5));
  for (double& v : g) v /= gs;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    int h = fa.height(), w = fa.width();
    std::vector<double> a(static_cast<std::size_t>(h * w)), b(a.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        a[static_cast<std::size_t>(y * w + x)] = fa.at(c, y, x);
        b[static_cast<std::size_t>(y * w + x)] = fb.at(c, y, x);
      }
    int scales = 0;
    while (scales < 5 && (std::min(fa.height(), fa.width()) >> scales) >= 11) ++scales;
    double wsum = 0.0;
    for (int j = 0; j < scales; ++j) wsum += weights[static_cast<std::size_t>(j)];
    double prod = 1.0;
    for (int j = 0; j < scales; ++j) {
      if (j > 0) {
        const int nh = h / 2, nw = w / 2;
        std::vector<double> na(static_cast<std::size_t>(nh * nw)), nb(na.size());
        for (int y = 0; y < nh; ++y)
          for (int x = 0; x < nw; ++x) {
            auto at = [&](const std::vector<double>& v, int yy, int xx) { return v[static_cast<std::size_t>(yy * w + xx)]; };
            na[static_cast<std::size_t>(y * nw + x)] = 0.25 * (at(a, 2 * y, 2 * x) + at(a, 2 * y + 1, 2 * x) + at(a, 2 * y, 2 * x + 1) + at(a, 2 * y + 1, 2 * x + 1));
            nb[static_cast<std::size_t>(y * nw + x)] = 0.25 * (at(b, 2 * y, 2 * x) + at(b, 2 * y + 1, 2 * x) + at(b, 2 * y, 2 * x + 1) + at(b, 2 * y + 1, 2 * x + 1));
          }
        a = na;
        b = nb;
        h = nh;
        w = nw;
      }
      double cs_sum = 0.0, ssim_sum = 0.0;
      const int oh = h - 10, ow = w - 10;
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
          for (int i = 0; i < 11; ++i)
            for (int k = 0; k < 11; ++k) {
              const double wgt = g[i] * g[k];
              const double va = a[static_cast<std::size_t>((y + i) * w + x + k)], vb = b[static_cast<std::size_t>((y + i) * w + x + k)];
              ma += wgt * va;
              mb += wgt * vb;
              saa += wgt * va * va;
              sbb += wgt * vb * vb;
              sab += wgt * va * vb;
            }
          saa -= ma * ma;
          sbb -= mb * mb;
          sab -= ma * mb;
          const double cs = (2 * sab + 9e-4) / (saa + sbb + 9e-4);
          cs_sum += cs;
          ssim_sum += cs * (2 * ma * mb + 1e-4) / (ma * ma + mb * mb + 1e-4);
        }
      const double v = (j + 1 < scales ? cs_sum : ssim_sum) / (oh * ow);
      prod *= std::pow(std::max(v, 1e-8), weights[static_cast<std::size_t>(j)] / wsum);
    }
    total += prod;
  }
  return total / 3.0;
}

TEST(MsSsim, MatchesDirectLoopOracle) {
  const Frame a = textured(48, 40, 2);
  for (double amp : {0.02, 0.1, 0.3}) {
    const Frame b = with_noise(a, amp, 5);
    EXPECT_NEAR(ms_ssim(a, b), oracle_ms_ssim(a, b), 1e-10) << amp;
  }
}

TEST(MsSsim, IdentitySymmetryMonotonicity) {
  const Frame a = textured(64, 64, 3);
  EXPECT_EQ(ms_ssim(a, a), 1.0);
  const Frame b = with_noise(a, 0.1, 9);
  EXPECT_EQ(ms_ssim(a, b), ms_ssim(b, a));
  double prev = 1.0;
  for (double amp : {0.01, 0.03, 0.06, 0.1, 0.2, 0.4}) {
    const double v = ms_ssim(a, with_noise(a, amp, 11));
    EXPECT_LT(v, prev) << amp;
    prev = v;
  }
}

TEST(MsSsim, ScaleCountRule) {
  EXPECT_EQ(ms_ssim_scales(64), 3);
  EXPECT_EQ(ms_ssim_scales(176), 5);
  EXPECT_EQ(ms_ssim_scales(175), 4);
  EXPECT_EQ(ms_ssim_scales(11), 1);
  EXPECT_THROW(ms_ssim_scales(10), std::invalid_argument);
}

TEST(MsSsim, GradientsMatchFiniteDifferences) {
  Var a = Var::parameter(textured(24, 24, 4).pixels());
  Var b = Var::parameter(with_noise(textured(24, 24, 4), 0.1, 3).pixels());
  Rng rng(1);
  auto loss = [&] { return ag::add_scalar(ag::scale(ms_ssim(a, b), -1.0), 1.0); };
  const auto r = check_gradients(loss, {{"a", &a}, {"b", &b}}, rng, 1e-5, 24, 1e-8);
  EXPECT_LT(r.max_rel_error, 1e-2) << r.worst_input;
}

RDCurve curve(const std::string& name, std::vector<std::pair<double, double>> rate_psnr) {
  RDCurve c;
  c.name = name;
  for (const auto& [r, q] : rate_psnr) c.points.push_back({name, r, q, 1.0 - std::pow(10.0, -q / 10.0)});
  return c;
}

RDCurve scaled(const RDCurve& c, double factor) {
  RDCurve out = c;
  for (auto& p : out.points) p.bpp *= factor;
  return out;
}

TEST(BdRate, AnalyticConstantRatios) {
  const RDCurve anchor = curve("anchor", {{0.1, 30.0}, {0.2, 32.5}, {0.45, 35.1}, {0.9, 37.0}, {1.6, 38.2}});
  for (BdFit fit : {BdFit::pchip, BdFit::cubic_poly}) {
    EXPECT_NEAR(bd_rate(anchor, anchor, Quality::psnr, fit), 0.0, 1e-12);
    EXPECT_NEAR(bd_rate(scaled(anchor, 0.5), anchor, Quality::psnr, fit), -50.0, 1e-9);
    EXPECT_NEAR(bd_rate(scaled(anchor, 1.25), anchor, Quality::psnr, fit), 25.0, 1e-9);
    EXPECT_NEAR(bd_rate(scaled(anchor, 0.5), anchor, Quality::msssim, fit), -50.0, 1e-9);
  }
}

TEST(BdRate, MatchesTrapezoidOnLinearInterpolant) {
  // Both curves are straight lines in (quality, log rate); every fit is exact,
  // so the BD value equals the trapezoid integral of the log difference.
  const RDCurve a = curve("a", {{0.1, 30}, {std::pow(10.0, -0.6), 32}, {std::pow(10.0, -0.2), 34}, {std::pow(10.0, 0.2), 36}});
  const RDCurve b = curve("b", {{std::pow(10.0, -0.9), 31}, {std::pow(10.0, -0.55), 33}, {std::pow(10.0, -0.2), 35}, {std::pow(10.0, 0.15), 37}});
  // log10 r_a(q) = -1 + 0.2 (q - 30); log10 r_b(q) = -0.9 + 0.175 (q - 31). Overlap [31, 36].
  double trap = 0.0;
  const int n = 100000;
  for (int i = 0; i <= n; ++i) {
    const double q = 31.0 + 5.0 * i / n;
    const double d = (-0.9 + 0.175 * (q - 31)) - (-1 + 0.2 * (q - 30));
    trap += (i == 0 || i == n ? 0.5 : 1.0) * d;
  }
  trap /= n;
  const double expected = 100.0 * (std::pow(10.0, trap) - 1.0);
  EXPECT_NEAR(bd_rate(b, a, Quality::psnr, BdFit::pchip), expected, 1e-6);
  EXPECT_NEAR(bd_rate(b, a, Quality::psnr, BdFit::cubic_poly), expected, 1e-6);
}

TEST(BdRate, AntisymmetryAndOrderInvariance) {
  const RDCurve a = curve("a", {{0.1, 30.0}, {0.2, 32.5}, {0.45, 35.1}, {0.9, 37.0}, {1.6, 38.2}});
  const RDCurve b = curve("b", {{0.08, 30.4}, {0.19, 33.1}, {0.4, 35.3}, {0.85, 37.6}, {1.5, 38.9}});
  const double ab = bd_rate(a, b), ba = bd_rate(b, a);
  EXPECT_NEAR((1 + ab / 100) * (1 + ba / 100), 1.0, 0.01);
  RDCurve shuffled = a;
  std::reverse(shuffled.points.begin(), shuffled.points.end());
  std::swap(shuffled.points[1], shuffled.points[3]);
  EXPECT_EQ(bd_rate(shuffled, b), ab);
  const BdResult both = bd_rate_both(a, b);
  EXPECT_EQ(both.pchip, ab);
}

TEST(BdRate, Errors) {
  const RDCurve a = curve("a", {{0.1, 30.0}, {0.2, 32.5}, {0.45, 35.1}, {0.9, 37.0}});
  const RDCurve three = curve("three", {{0.1, 30.0}, {0.2, 32.5}, {0.45, 35.1}});
  const RDCurve far = curve("far", {{0.1, 50.0}, {0.2, 52.5}, {0.45, 55.1}, {0.9, 57.0}});
  EXPECT_THROW(bd_rate(three, a), DataError);
  EXPECT_THROW(bd_rate(far, a), DataError);
}

TEST(Reports, FrameLogJsonRoundTrip) {
  FrameLog f{4, 1, 0.0, 0.031, 0.12, kPsnrIdentical, 1.0};
  const FrameLog back = frame_log_from_json(to_json_line(f));
  EXPECT_EQ(back.frame, 4);
  EXPECT_EQ(back.level, 1);
  EXPECT_EQ(back.psnr, kPsnrIdentical);
  EXPECT_DOUBLE_EQ(back.bpp(), 0.151);
  EXPECT_NE(to_json_line(f).find("\"bpp_motion\""), std::string::npos);
  EXPECT_THROW(frame_log_from_json("{\"frame\":1}"), DataError);
}

TEST(Reports, AnchorCsvAndOutputs) {
  const auto dir = std::filesystem::temp_directory_path() / "lhbd_eval";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "anchor.csv");
    out << "quality_label,bpp,psnr,msssim\nq22,0.5,36.1,0.98\nq27,0.2,33.0,0.96\n";
  }
  const RDCurve c = read_anchor_csv(dir / "anchor.csv");
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[1].label, "q27");
  {
    std::ofstream out(dir / "bad.csv");
    out << "quality_label,bpp,psnr,msssim\nq22,abc,36.1,0.98\n";
  }
  EXPECT_THROW(read_anchor_csv(dir / "bad.csv"), DataError);
  EXPECT_THROW(read_anchor_csv(dir / "missing.csv"), DataError);

  std::vector<FrameLog> logs;
  for (int i = 0; i < 9; ++i) logs.push_back({i, i % 8 == 0 ? 0 : 3, i % 8 == 0 ? 1.0 : 0.0, 0.1, 0.2, 30, 0.9});
  write_gop_profile_csv(logs, dir / "profile.csv");
  std::ifstream in(dir / "profile.csv");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 10);
  const std::string svg = gop_profile_svg(logs);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(rd_plot_svg({c}).find("polyline"), std::string::npos);
  const RDPoint p = summarize(logs, "x");
  EXPECT_NEAR(p.bpp, (2.0 + 9 * 0.3) / 9.0, 1e-12);
  std::filesystem::remove_all(dir);
}

TEST(RDCurve, FlagsNonMonotoneQuality) {
  const RDCurve c = curve("c", {{0.1, 30.0}, {0.2, 29.0}, {0.3, 31.0}});
  EXPECT_EQ(c.monotonicity_violations(), std::vector<std::size_t>{1});
}

}  // namespace
}  // namespace lhbd
