#include "sondeharm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "sondeharm/error.hpp"

namespace sondeharm {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr std::array<double, 4> kGl4Nodes = {-0.861136311594052575223946488892809,
                                             -0.339981043584856264802665759103245,
                                             0.339981043584856264802665759103245,
                                             0.861136311594052575223946488892809};
constexpr std::array<double, 4> kGl4Weights = {0.347854845137453857373063949221999,
                                               0.652145154862546142626936050778001,
                                               0.652145154862546142626936050778001,
                                               0.347854845137453857373063949221999};

struct Panel {
  double a;
  double b;
  GkEstimate est;
  double err;
  bool operator<(const Panel& o) const {
    if (err != o.err) return err < o.err;
    return a > o.a;  // deterministic tie-break
  }
};

}  // namespace

double GkEstimate::error() const noexcept { return std::abs(kronrod - gauss); }

GkEstimate gauss_kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double fsum = f(c - dx) + f(c + dx);
    k += kWgk[j] * fsum;
    if (j % 2 == 1) g += kWg[j / 2] * fsum;
  }
  return {k * h, g * h};
}

void gauss_kronrod15_nodes(double a, double b, std::span<double, 15> nodes,
                           std::span<double, 15> weights) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  for (int j = 0; j < 7; ++j) {
    nodes[j] = c - h * kXgk[j];
    weights[j] = h * kWgk[j];
    nodes[14 - j] = c + h * kXgk[j];
    weights[14 - j] = h * kWgk[j];
  }
  nodes[7] = c;
  weights[7] = h * kWgk[7];
}

const std::array<double, 4>& gauss_legendre4_nodes() { return kGl4Nodes; }
const std::array<double, 4>& gauss_legendre4_weights() { return kGl4Weights; }

AdaptiveRule adaptive_rule(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, const QuadratureOptions& opts) {
  if (!(b > a)) throw Error(ErrorCode::InvalidParams, "quadrature interval is empty");
  std::vector<double> cuts = {a, b};
  for (double x : breakpoints)
    if (x > a && x < b && std::isfinite(x)) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Panel> queue;
  std::vector<Panel> frozen;
  double total_err = 0.0;
  auto push = [&](double lo, double hi) {
    const GkEstimate est = gauss_kronrod15(f, lo, hi);
    Panel panel{lo, hi, est, est.error()};
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= opts.min_relative_width * std::max(std::abs(mid), 1.0)) {
      frozen.push_back(panel);
      return;
    }
    total_err += panel.err;
    queue.push(panel);
  };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) push(cuts[i], cuts[i + 1]);

  while (!queue.empty() && total_err > opts.abs_tol) {
    if (queue.size() + frozen.size() >= opts.max_panels)
      throw Error(ErrorCode::QuadratureFailure,
                  "tolerance not reached with " + std::to_string(opts.max_panels) +
                      " panels (error estimate " + std::to_string(total_err) + ")");
    const Panel worst = queue.top();
    queue.pop();
    total_err -= worst.err;
    const double mid = 0.5 * (worst.a + worst.b);
    push(worst.a, mid);
    push(mid, worst.b);
    if (!std::isfinite(total_err))
      throw Error(ErrorCode::QuadratureFailure, "non-finite integrand");
  }

  std::vector<Panel> panels = std::move(frozen);
  while (!queue.empty()) {
    panels.push_back(queue.top());
    queue.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });

  AdaptiveRule rule;
  rule.panels = panels.size();
  rule.nodes.resize(15 * panels.size());
  rule.weights.resize(15 * panels.size());
  for (std::size_t i = 0; i < panels.size(); ++i) {
    gauss_kronrod15_nodes(panels[i].a, panels[i].b,
                          std::span<double, 15>(rule.nodes.data() + 15 * i, 15),
                          std::span<double, 15>(rule.weights.data() + 15 * i, 15));
    rule.integral += panels[i].est.kronrod;
    rule.error += panels[i].err;
  }
  return rule;
}

}  // namespace sondeharm
