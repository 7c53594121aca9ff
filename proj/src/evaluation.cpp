#include "lhbd/evaluation.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lhbd/errors.hpp"
#include "lhbd/ops.hpp"

namespace lhbd {

using ag::Var;

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const Frame& a, const Frame& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("psnr: frame dimensions differ");
  }
  const auto& x = a.pixels().vec();
  const auto& y = b.pixels().vec();
  double se = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) se += (x[i] - y[i]) * (x[i] - y[i]);
  return psnr_from_mse(se / static_cast<double>(x.size()));
}

// ---------------------------------------------------------------------------
// MS-SSIM

int ms_ssim_scales(int min_side, const MsSsimOptions& opt) {
  int scales = 0;
  for (int s = 1; s <= static_cast<int>(opt.weights.size()); ++s) {
    if ((min_side >> (s - 1)) >= opt.window) scales = s;
  }
  if (scales == 0) {
    throw std::invalid_argument("ms_ssim: input side " + std::to_string(min_side) + " is smaller than the " +
                                std::to_string(opt.window) + "-tap window");
  }
  return scales;
}

namespace {

std::shared_ptr<const kernels::ResampleMatrix> gaussian_valid(int n, int window, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  double total = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - (window - 1) / 2.0;
    taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[static_cast<std::size_t>(i)];
  }
  auto m = std::make_shared<kernels::ResampleMatrix>();
  m->rows = n - window + 1;
  m->cols = n;
  m->weights.assign(static_cast<std::size_t>(m->rows) * n, 0.0);
  for (int r = 0; r < m->rows; ++r)
    for (int i = 0; i < window; ++i)
      m->weights[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(r + i)] =
          taps[static_cast<std::size_t>(i)] / total;
  return m;
}

Var half(const Var& x) {
  const Shape s = x.shape();
  const Var even = ag::crop(x, s.h / 2 * 2, s.w / 2 * 2);
  return ag::avg_pool2(even);
}

Var positive_pow(const Var& v, double w) { return ag::pow_scalar(ag::add_scalar(ag::relu(ag::add_scalar(v, -1e-8)), 1e-8), w); }

}  // namespace

Var ms_ssim(const Var& a, const Var& b, const MsSsimOptions& opt) {
  const Shape s = a.shape();
  if (!(s == b.shape())) throw std::invalid_argument("ms_ssim: shapes " + s.str() + " vs " + b.shape().str());
  const int scales = ms_ssim_scales(std::min(s.h, s.w), opt);
  double wsum = 0.0;
  for (int j = 0; j < scales; ++j) wsum += opt.weights[static_cast<std::size_t>(j)];
  constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;

  Var x = a, y = b, product;
  for (int j = 0; j < scales; ++j) {
    if (j > 0) {
      x = half(x);
      y = half(y);
    }
    const auto gh = gaussian_valid(x.shape().h, opt.window, opt.sigma);
    const auto gw = gaussian_valid(x.shape().w, opt.window, opt.sigma);
    auto blur = [&](const Var& v) { return ag::resample(v, gh, gw); };
    const Var mx = blur(x), my = blur(y);
    const Var mxx = ag::mul(mx, mx), myy = ag::mul(my, my), mxy = ag::mul(mx, my);
    const Var sxx = ag::sub(blur(ag::mul(x, x)), mxx);
    const Var syy = ag::sub(blur(ag::mul(y, y)), myy);
    const Var sxy = ag::sub(blur(ag::mul(x, y)), mxy);
    const Var cs_map = ag::div(ag::add_scalar(ag::scale(sxy, 2.0), C2), ag::add_scalar(ag::add(sxx, syy), C2));
    const double w = opt.weights[static_cast<std::size_t>(j)] / wsum;
    Var term;
    if (j + 1 < scales) {
      term = positive_pow(ag::plane_mean(cs_map), w);
    } else {
      const Var lum = ag::div(ag::add_scalar(ag::scale(mxy, 2.0), C1), ag::add_scalar(ag::add(mxx, myy), C1));
      term = positive_pow(ag::plane_mean(ag::mul(lum, cs_map)), w);
    }
    product = product.defined() ? ag::mul(product, term) : term;
  }
  return ag::mean(product);
}

double ms_ssim(const Frame& a, const Frame& b, const MsSsimOptions& opt) {
  ag::NoGradGuard guard;
  const double v = ms_ssim(Var::constant(a.pixels()), Var::constant(b.pixels()), opt).value().item();
  return std::min(v, 1.0);
}

// ---------------------------------------------------------------------------
// BD-rate

RDCurve RDCurve::sorted() const {
  RDCurve c = *this;
  std::sort(c.points.begin(), c.points.end(), [](const RDPoint& x, const RDPoint& y) { return x.bpp < y.bpp; });
  return c;
}

namespace {

double quality_of(const RDPoint& p, Quality q) {
  if (q == Quality::psnr) return p.psnr;
  if (p.msssim >= 1.0) return kPsnrIdentical;
  return -10.0 * std::log10(1.0 - p.msssim);
}

struct Samples {
  std::vector<double> q;
  std::vector<double> log_rate;
};

Samples prepare(const RDCurve& curve, Quality q) {
  if (curve.points.size() < 4) {
    throw DataError("bd_rate: curve '" + curve.name + "' needs at least 4 points, has " +
                    std::to_string(curve.points.size()));
  }
  std::vector<std::pair<double, double>> pts;
  for (const RDPoint& p : curve.points) {
    const double qual = quality_of(p, q);
    if (!(p.bpp > 0.0) || !std::isfinite(qual)) throw DataError("bd_rate: invalid point in '" + curve.name + "'");
    pts.emplace_back(qual, std::log10(p.bpp));
  }
  std::sort(pts.begin(), pts.end());
  Samples s;
  for (const auto& [qual, r] : pts) {
    if (!s.q.empty() && qual <= s.q.back()) throw DataError("bd_rate: repeated quality value in '" + curve.name + "'");
    s.q.push_back(qual);
    s.log_rate.push_back(r);
  }
  return s;
}

// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes with
// the usual three-point end conditions).
class Pchip {
 public:
  explicit Pchip(const Samples& s) : x_(s.q), y_(s.log_rate), d_(x_.size()) {
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) {
        d_[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1], w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = edge(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  [[nodiscard]] double operator()(double x) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - x_.begin() - 1));
    k = std::min(k, x_.size() - 2);
    const double h = x_[k + 1] - x_[k], t = (x - x_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
           (t3 - t2) * h * d_[k + 1];
  }

  /// Exact integral over [lo, hi] (3-point Gauss-Legendre per cubic piece).
  [[nodiscard]] double integrate(double lo, double hi) const {
    static constexpr std::array<double, 3> nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < x_.size(); ++k) {
      const double a = std::max(lo, x_[k]), b = std::min(hi, x_[k + 1]);
      if (b <= a) continue;
      const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
      for (std::size_t i = 0; i < 3; ++i) {
        // Evaluate inside piece k explicitly so knots never switch pieces.
        const double x = mid + rad * nodes[i];
        const double h = x_[k + 1] - x_[k], t = (x - x_[k]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double v = (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] +
                         (-2 * t3 + 3 * t2) * y_[k + 1] + (t3 - t2) * h * d_[k + 1];
        total += weights[i] * rad * v;
      }
    }
    return total;
  }

 private:
  static double edge(double h0, double h1, double m0, double m1) {
    double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (d * m0 <= 0.0) {
      d = 0.0;
    } else if (m0 * m1 < 0.0 && std::abs(d) > 3.0 * std::abs(m0)) {
      d = 3.0 * m0;
    }
    return d;
  }

  std::vector<double> x_, y_, d_;
};

double poly_integral(const Samples& s, double lo, double hi) {
  const auto n = static_cast<Eigen::Index>(s.q.size());
  // Center for conditioning; the integral is shift invariant.
  const double c = 0.5 * (s.q.front() + s.q.back());
  Eigen::MatrixXd A(n, 4);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = s.q[static_cast<std::size_t>(i)] - c;
    A(i, 0) = 1.0;
    A(i, 1) = x;
    A(i, 2) = x * x;
    A(i, 3) = x * x * x;
    r(i) = s.log_rate[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd p = A.colPivHouseholderQr().solve(r);
  auto antideriv = [&](double x) {
    x -= c;
    return p(0) * x + p(1) * x * x / 2.0 + p(2) * x * x * x / 3.0 + p(3) * x * x * x * x / 4.0;
  };
  return antideriv(hi) - antideriv(lo);
}

}  // namespace

double bd_rate(const RDCurve& test, const RDCurve& anchor, Quality q, BdFit fit) {
  const Samples t = prepare(test, q), a = prepare(anchor, q);
  const double lo = std::max(t.q.front(), a.q.front());
  const double hi = std::min(t.q.back(), a.q.back());
  if (!(hi > lo)) throw DataError("bd_rate: quality ranges of '" + test.name + "' and '" + anchor.name + "' do not overlap");
  double it = 0.0, ia = 0.0;
  if (fit == BdFit::pchip) {
    it = Pchip(t).integrate(lo, hi);
    ia = Pchip(a).integrate(lo, hi);
  } else {
    it = poly_integral(t, lo, hi);
    ia = poly_integral(a, lo, hi);
  }
  return 100.0 * (std::pow(10.0, (it - ia) / (hi - lo)) - 1.0);
}

bool BdResult::disagree() const { return std::abs(pchip - poly) > 0.5; }

BdResult bd_rate_both(const RDCurve& test, const RDCurve& anchor, Quality q) {
  return BdResult{bd_rate(test, anchor, q, BdFit::pchip), bd_rate(test, anchor, q, BdFit::cubic_poly)};
}

std::vector<std::size_t> RDCurve::monotonicity_violations(Quality q) const {
  const RDCurve s = sorted();
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < s.points.size(); ++i)
    if (quality_of(s.points[i], q) < quality_of(s.points[i - 1], q)) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Logs and reports

namespace {

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kPsnrIdentical;
    if (s == "-inf") return -kPsnrIdentical;
    throw DataError("log: unexpected string value '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

std::string to_json_line(const FrameLog& log) {
  nlohmann::json j;
  j["frame"] = log.frame;
  j["level"] = log.level;
  j["bpp_image"] = log.bpp_image;
  j["bpp_motion"] = log.bpp_motion;
  j["bpp_residual"] = log.bpp_residual;
  j["psnr"] = number_or_inf(log.psnr);
  j["msssim"] = log.msssim;
  return j.dump();
}

FrameLog frame_log_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    FrameLog f;
    f.frame = j.at("frame").get<int>();
    f.level = j.at("level").get<int>();
    f.bpp_image = j.value("bpp_image", 0.0);
    f.bpp_motion = j.at("bpp_motion").get<double>();
    f.bpp_residual = j.at("bpp_residual").get<double>();
    f.psnr = read_number(j.at("psnr"));
    f.msssim = j.at("msssim").get<double>();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed frame log line: ") + e.what());
  }
}

RDPoint summarize(const std::vector<FrameLog>& frames, const std::string& label) {
  if (frames.empty()) throw DataError("summarize: no frames");
  RDPoint p;
  p.label = label;
  for (const FrameLog& f : frames) {
    p.bpp += f.bpp();
    p.psnr += f.psnr;
    p.msssim += f.msssim;
  }
  const auto n = static_cast<double>(frames.size());
  p.bpp /= n;
  p.psnr /= n;
  p.msssim /= n;
  return p;
}

RDCurve read_anchor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open anchor file " + path.string());
  RDCurve c;
  c.name = path.stem().string();
  std::string line;
  if (!std::getline(in, line) || line.rfind("quality_label,bpp,psnr,msssim", 0) != 0) {
    throw DataError(path.string() + ": expected header quality_label,bpp,psnr,msssim");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::array<std::string, 4> cells;
    for (auto& cell : cells)
      if (!std::getline(ss, cell, ',')) throw DataError(path.string() + ":" + std::to_string(line_no) + ": too few fields");
    RDPoint p;
    p.label = cells[0];
    try {
      p.bpp = std::stod(cells[1]);
      p.psnr = std::stod(cells[2]);
      p.msssim = std::stod(cells[3]);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (!(p.bpp > 0.0)) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bpp must be positive");
    c.points.push_back(p);
  }
  return c;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

}  // namespace

void write_rd_csv(const std::vector<RDCurve>& curves, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "curve,label,bpp,psnr,msssim\n";
  for (const RDCurve& c : curves)
    for (const RDPoint& p : c.sorted().points)
      out << c.name << ',' << p.label << ',' << p.bpp << ',' << p.psnr << ',' << p.msssim << '\n';
}

void write_gop_profile_csv(const std::vector<FrameLog>& frames, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "frame,level,bpp_image,bpp_motion,bpp_residual,bpp,psnr,msssim\n";
  std::vector<FrameLog> sorted = frames;
  std::sort(sorted.begin(), sorted.end(), [](const FrameLog& a, const FrameLog& b) { return a.frame < b.frame; });
  for (const FrameLog& f : sorted)
    out << f.frame << ',' << f.level << ',' << f.bpp_image << ',' << f.bpp_motion << ',' << f.bpp_residual << ','
        << f.bpp() << ',' << f.psnr << ',' << f.msssim << '\n';
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "toggle,bd_rate_psnr,bd_rate_poly,decode_seconds_on,decode_seconds_off\n";
  for (const AblationRow& r : rows)
    out << r.toggle << ',' << r.bd_rate_psnr << ',' << r.bd_rate_poly << ',' << r.decode_seconds_on << ','
        << r.decode_seconds_off << '\n';
}

namespace {

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Axes {
  double x0, x1, y0, y1;
  static constexpr double W = 640, H = 420, L = 60, R = 20, T = 20, B = 50;
  [[nodiscard]] double px(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
  [[nodiscard]] double py(double y) const { return H - B - (y - y0) / (y1 - y0) * (H - T - B); }
};

std::string svg_frame(const Axes& ax, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << std::setprecision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Axes::W << "\" height=\"" << Axes::H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << Axes::L << "\" y1=\"" << Axes::H - Axes::B << "\" x2=\"" << Axes::W - Axes::R << "\" y2=\""
    << Axes::H - Axes::B << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << Axes::L << "\" y1=\"" << Axes::T << "\" x2=\"" << Axes::L << "\" y2=\"" << Axes::H - Axes::B
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = ax.x0 + (ax.x1 - ax.x0) * i / 4.0, yv = ax.y0 + (ax.y1 - ax.y0) * i / 4.0;
    s << "<text x=\"" << ax.px(xv) << "\" y=\"" << Axes::H - Axes::B + 16 << "\" font-size=\"11\" text-anchor=\"middle\">"
      << xv << "</text>\n";
    s << "<text x=\"" << Axes::L - 6 << "\" y=\"" << ax.py(yv) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << yv
      << "</text>\n";
  }
  s << "<text x=\"" << Axes::W / 2 << "\" y=\"" << Axes::H - 10 << "\" font-size=\"13\" text-anchor=\"middle\">"
    << xlabel << "</text>\n";
  s << "<text x=\"14\" y=\"" << Axes::H / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << Axes::H / 2 << ")\">" << ylabel << "</text>\n";
  return s.str();
}

}  // namespace

std::string rd_plot_svg(const std::vector<RDCurve>& curves, Quality q) {
  Axes ax{1e300, -1e300, 1e300, -1e300};
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      const double y = quality_of(p, q);
      if (!std::isfinite(y)) continue;
      ax.x0 = std::min(ax.x0, p.bpp);
      ax.x1 = std::max(ax.x1, p.bpp);
      ax.y0 = std::min(ax.y0, y);
      ax.y1 = std::max(ax.y1, y);
    }
  if (ax.x0 > ax.x1) ax = Axes{0, 1, 0, 1};
  const double padx = std::max(1e-6, 0.05 * (ax.x1 - ax.x0)), pady = std::max(1e-6, 0.05 * (ax.y1 - ax.y0));
  ax = Axes{ax.x0 - padx, ax.x1 + padx, ax.y0 - pady, ax.y1 + pady};
  std::ostringstream s;
  s << std::setprecision(6);
  s << svg_frame(ax, "bpp", q == Quality::psnr ? "PSNR (dB)" : "MS-SSIM (dB)");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[i].sorted().points)
      if (std::isfinite(quality_of(p, q))) s << ax.px(p.bpp) << ',' << ax.py(quality_of(p, q)) << ' ';
    s << "\"/>\n";
    for (const auto& p : curves[i].points)
      if (std::isfinite(quality_of(p, q)))
        s << "<circle cx=\"" << ax.px(p.bpp) << "\" cy=\"" << ax.py(quality_of(p, q)) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    s << "<text x=\"" << Axes::L + 10 << "\" y=\"" << Axes::T + 14 * (i + 1) << "\" font-size=\"12\" fill=\"" << color
      << "\">" << curves[i].name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string gop_profile_svg(const std::vector<FrameLog>& frames) {
  std::vector<FrameLog> sorted = frames;
  std::sort(sorted.begin(), sorted.end(), [](const FrameLog& a, const FrameLog& b) { return a.frame < b.frame; });
  double top = 1e-6;
  for (const auto& f : sorted) top = std::max(top, f.bpp());
  Axes ax{-0.5, static_cast<double>(sorted.size()) - 0.5, 0.0, top * 1.1};
  std::ostringstream s;
  s << std::setprecision(6);
  s << svg_frame(ax, "frame", "bpp");
  const double bw = 0.7 * (ax.px(1) - ax.px(0));
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& f = sorted[i];
    double base = 0.0;
    const std::array<std::pair<double, const char*>, 3> parts{
        std::pair{f.bpp_image, kPalette[0]}, std::pair{f.bpp_motion, kPalette[1]}, std::pair{f.bpp_residual, kPalette[2]}};
    for (const auto& [v, color] : parts) {
      if (v <= 0.0) continue;
      const double yt = ax.py(base + v), yb = ax.py(base);
      s << "<rect x=\"" << ax.px(static_cast<double>(i)) - bw / 2 << "\" y=\"" << yt << "\" width=\"" << bw
        << "\" height=\"" << yb - yt << "\" fill=\"" << color << "\"/>\n";
      base += v;
    }
    s << "<text x=\"" << ax.px(static_cast<double>(i)) << "\" y=\"" << ax.py(base) - 4
      << "\" font-size=\"10\" text-anchor=\"middle\">L" << f.level << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string metric_conventions(const MsSsimOptions& opt) {
  std::ostringstream s;
  s << "psnr: 10*log10(1/MSE) over RGB in [0,1], frame-averaged; ms-ssim: " << opt.window
    << "-tap Gaussian window sigma " << opt.sigma << ", weights";
  for (double w : opt.weights) s << ' ' << w;
  s << ", scales reduced (weights renormalized) when the smaller side halved S-1 times is below the window, "
       "channel-averaged";
  return s.str();
}

}  // namespace lhbd
