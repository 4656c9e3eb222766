#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qh/acceptance.hpp"
#include "qh/geometry.hpp"
#include "qh/monopole.hpp"
#include "qh/nahm.hpp"
#include "qh/quadric.hpp"
#include "qh/settings.hpp"
#include "qh/twistor.hpp"

namespace qh::cli {

inline constexpr const char* version = "1.0.0";

using Json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, usage = 1, check_failed = 2 };

/// Builds one flat output record: dotted keys in insertion order, checks
/// paired with their tolerance, plus optional CSV rows for grid outputs.
class Record {
public:
  explicit Record(std::string command) {
    doc_["command"] = std::move(command);
    doc_["version"] = version;
  }

  template <class T>
  void put(const std::string& key, const T& value) {
    doc_[key] = value;
  }

  void put_complex(const std::string& key, cplx v) {
    doc_[key + ".re"] = v.real();
    doc_[key + ".im"] = v.imag();
  }

  void put_vector(const std::string& key, const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    doc_[key] = out;
  }

  /// value < tol (or > tol for lower bounds) must hold for exit code 0.
  void check(const std::string& name, double value, double tol, bool upper = true) {
    const bool pass = std::isfinite(value) && (upper ? value < tol : value > tol);
    doc_["checks." + name + ".value"] = value;
    doc_["checks." + name + ".tol"] = tol;
    doc_["checks." + name + ".bound"] = upper ? "upper" : "lower";
    doc_["checks." + name + ".pass"] = pass;
    all_pass_ = all_pass_ && pass;
  }

  void fail(const Error& e) {
    doc_["error.kind"] = e.kind();
    doc_["error.message"] = e.what();
    all_pass_ = false;
  }

  void table(std::vector<std::string> header) { header_ = std::move(header); }
  void row(std::vector<double> values) { rows_.push_back(std::move(values)); }
  bool has_table() const { return !header_.empty(); }

  bool passed() const { return all_pass_; }

  std::string json(double seconds) {
    doc_["status"] = all_pass_ ? "pass" : "fail";
    doc_["timing.seconds"] = seconds;
    return doc_.dump(2) + "\n";
  }

  /// Grid rows when the command produced a table, key,value pairs otherwise.
  std::string csv(double seconds) {
    std::ostringstream os;
    char buf[64];
    if (has_table()) {
      for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
      os << "\n";
      for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", r[i]);
          os << (i ? "," : "") << buf;
        }
        os << "\n";
      }
      return os.str();
    }
    doc_["status"] = all_pass_ ? "pass" : "fail";
    doc_["timing.seconds"] = seconds;
    os << "key,value\n";
    for (const auto& [k, v] : doc_.items()) {
      os << k << ",";
      if (v.is_number_float()) {
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        os << buf;
      } else if (v.is_string()) {
        os << '"' << v.get<std::string>() << '"';
      } else {
        os << '"' << v.dump() << '"';
      }
      os << "\n";
    }
    return os.str();
  }

private:
  Json doc_;
  bool all_pass_ = true;
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

namespace detail {

inline Eigen::VectorXd to_vec(const std::vector<double>& v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
  return x;
}

inline Eigen::Vector3d to_vec3(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw ConfigurationError(std::string(what) + " needs 3 components");
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

inline Vec4 to_vec4(const std::vector<double>& v, const char* what) {
  if (v.size() != 4) throw ConfigurationError(std::string(what) + " needs 4 components");
  return Vec4(v[0], v[1], v[2], v[3]);
}

inline Reference parse_reference(const std::string& s) {
  if (s == "infinity") return Reference::at_infinity;
  if (s == "max-beta") return Reference::at_max_beta;
  if (s == "nearest-branch") return Reference::at_nearest_branch;
  throw ConfigurationError("unknown reference '" + s + "' (infinity, max-beta, nearest-branch)");
}

inline const char* reference_name(Reference r) {
  switch (r) {
    case Reference::at_infinity: return "infinity";
    case Reference::at_max_beta: return "max-beta";
    case Reference::at_nearest_branch: return "nearest-branch";
  }
  return "infinity";
}

inline ContourRule parse_rule(const std::string& s) {
  if (s == "enclose_mu_plus") return ContourRule::enclose_mu_plus;
  if (s == "enclose_origin") return ContourRule::enclose_origin;
  if (s == "none") return ContourRule::none;
  throw ConfigurationError("unknown contour rule '" + s + "'");
}

}  // namespace detail

/// {"name": ..., "kind": "F" | "f", "numerator": [{"lambda": i, "mu": j, "re": c, "im": d}, ...],
///  "lambda_power": p, "mu_power": q, "rule": "enclose_mu_plus" | "enclose_origin" | "none"}
inline TwistorKernel parse_kernel_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("kernel JSON: ") + e.what());
  }
  try {
    RationalKernelSpec spec;
    spec.name = j.value("name", "rational");
    const std::string kind = j.value("kind", "F");
    if (kind == "F")
      spec.kind = KernelKind::F_weight_minus2;
    else if (kind == "f")
      spec.kind = KernelKind::f_weight_zero;
    else
      throw ConfigurationError("kernel JSON: kind must be \"F\" or \"f\"");
    if (!j.contains("numerator") || !j["numerator"].is_array() || j["numerator"].empty())
      throw ConfigurationError("kernel JSON: numerator must be a non-empty array of terms");
    for (const auto& t : j["numerator"]) {
      RationalKernelSpec::Term term;
      term.lambda_power = t.value("lambda", 0);
      term.mu_power = t.value("mu", 0);
      term.coefficient = cplx(t.value("re", 1.0), t.value("im", 0.0));
      if (term.lambda_power < 0 || term.mu_power < 0)
        throw ConfigurationError("kernel JSON: numerator powers must be non-negative");
      spec.numerator.push_back(term);
    }
    spec.lambda_power = j.value("lambda_power", 0);
    spec.mu_power = j.value("mu_power", 0);
    spec.rule = detail::parse_rule(j.value("rule", std::string("enclose_mu_plus")));
    return kernels::rational(spec);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("kernel JSON: ") + e.what());
  }
}

/// Flags shared by all subcommands.
struct Common {
  std::string output = "json";
  std::string out_path;
  std::optional<double> quad_tol, ode_tol, fd_step, check_tol;

  void attach(CLI::App* app) {
    app->add_option("--output", output, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app->add_option("--out", out_path, "write to this file instead of stdout");
    app->add_option("--quad-tol", quad_tol, "quadrature tolerance (env QH_TOL_QUAD)");
    app->add_option("--ode-tol", ode_tol, "ODE tolerance (env QH_TOL_ODE)");
    app->add_option("--fd-step", fd_step, "finite-difference base step (env QH_FD_STEP)");
    app->add_option("--check-tol", check_tol, "override the tolerance of the command's checks");
  }

  Settings settings() const {
    Settings s = Settings::from_env();
    if (quad_tol) s.quad_tol = *quad_tol;
    if (ode_tol) s.ode_tol = *ode_tol;
    if (fd_step) s.fd_step = *fd_step;
    s.validate();
    return s;
  }

  double tol(double fallback) const { return check_tol ? *check_tol : fallback; }
};

struct Quadric {
  std::vector<double> betas;
  double C = 1.0;
  std::string reference;
  int direction = 1;
  std::vector<std::vector<double>> points;

  void attach(CLI::App* app) {
    app->add_option("--betas", betas, "comma-separated betas")->delimiter(',')->required();
    app->add_option("--c", C, "quadric scale C");
    app->add_option("--reference", reference, "infinity, max-beta or nearest-branch");
    app->add_option("--direction", direction, "+1 or -1")->check(CLI::IsMember({-1, 1}));
    app->add_option("--point", points, "comma-separated point (repeatable)")->delimiter(',')->required()
        ->allow_extra_args(false);
  }

  HProfile profile(const Settings& s) const {
    QuadricFamily fam(betas, C);
    HProfile p = default_profile(fam);
    if (!reference.empty()) p.reference = detail::parse_reference(reference);
    p.direction = direction;
    p.tol = s.quad_tol;
    return p;
  }

  std::vector<Eigen::VectorXd> xs() const {
    std::vector<Eigen::VectorXd> out;
    for (const auto& p : points) {
      if (p.size() != betas.size()) throw ConfigurationError("point dimension must match the number of betas");
      out.push_back(detail::to_vec(p));
    }
    return out;
  }
};

namespace commands {

inline void eval_v(const Quadric& q, const Common& c, Record& rec) {
  const Settings s = c.settings();
  const HProfile prof = q.profile(s);
  rec.put("inputs.betas", q.betas);
  rec.put("inputs.C", q.C);
  rec.put("inputs.reference", detail::reference_name(prof.reference));
  rec.put("inputs.direction", q.direction);
  const auto xs = q.xs();
  std::vector<std::string> header;
  for (int i = 0; i < prof.family.n(); ++i) header.push_back("x" + std::to_string(i + 1));
  for (const char* h : {"H", "V", "Vhat"}) header.push_back(h);
  rec.table(header);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto f = sample_field(xs[k], prof);
    const std::string p = xs.size() == 1 ? "results." : "results." + std::to_string(k) + ".";
    rec.put_vector(p + "point", xs[k]);
    rec.put(p + "H", f.H);
    rec.put(p + "V", f.V);
    rec.put(p + "Vhat", f.Vhat);
    std::vector<double> row(xs[k].data(), xs[k].data() + xs[k].size());
    row.insert(row.end(), {f.H, f.V, f.Vhat});
    rec.row(row);
  }
}

inline void verify_laplace(const Quadric& q, const Common& c, Record& rec) {
  const Settings s = c.settings();
  const HProfile prof = q.profile(s);
  rec.put("inputs.betas", q.betas);
  rec.put("inputs.C", q.C);
  rec.put("inputs.fd_step", s.fd_step);
  auto V = [&](const Eigen::VectorXd& p) { return eval_V(p, prof); };
  const auto xs = q.xs();
  std::vector<std::string> header;
  for (int i = 0; i < prof.family.n(); ++i) header.push_back("x" + std::to_string(i + 1));
  for (const char* h : {"laplacian", "scaling_residual"}) header.push_back(h);
  rec.table(header);
  double worst = 0.0, scaling = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto d = fd_laplacian(V, xs[k], s.fd());
    const double sc = std::abs(xs[k].dot(d.gradient) + 2.0 * q.C * eval_Vhat(xs[k], prof.family, q.direction));
    worst = std::max(worst, std::abs(d.laplacian));
    scaling = std::max(scaling, sc);
    const std::string p = xs.size() == 1 ? "results." : "results." + std::to_string(k) + ".";
    rec.put(p + "laplacian", d.laplacian);
    rec.put(p + "scaling_residual", sc);
    std::vector<double> row(xs[k].data(), xs[k].data() + xs[k].size());
    row.insert(row.end(), {d.laplacian, sc});
    rec.row(row);
  }
  rec.check("laplacian", worst, c.tol(1e-5));
  rec.check("scaling", scaling, c.tol(1e-6));
}

struct FlowArgs {
  std::vector<double> w0;
  double s0 = 0.0;
  std::optional<double> s1;
  double fraction = 0.8;
  int samples = 0;

  void attach(CLI::App* app) {
    app->add_option("--w0", w0, "initial state w1,w2,w3")->delimiter(',')->required();
    app->add_option("--s0", s0, "initial parameter");
    app->add_option("--s1", s1, "final parameter (default: fraction of the blow-up)");
    app->add_option("--fraction", fraction, "fraction of the blow-up distance when --s1 is absent");
    app->add_option("--samples", samples, "uniform output samples (CSV rows)");
  }
};

inline void euler_flow_cmd(const FlowArgs& a, const Common& c, Record& rec) {
  const Settings s = c.settings();
  const Vec3 w0 = detail::to_vec3(a.w0, "--w0");
  const double sb = euler_blowup(w0, a.s0);
  const double s1 = a.s1 ? *a.s1 : a.s0 + a.fraction * (sb - a.s0);
  if (!std::isfinite(s1)) throw ConfigurationError("flow has no blow-up; pass --s1");
  rec.put("inputs.w0", a.w0);
  rec.put("inputs.s0", a.s0);
  rec.put("inputs.s1", s1);
  rec.put("results.blowup", sb);
  const auto tr = euler_flow(w0, a.s0, s1, s.ode_tol);
  const auto inv0 = elliptic_invariants(w0);
  double drift = 0.0, rel = 0.0, abs_res = 0.0;
  for (const auto& y : tr.states()) {
    const Vec3 w(y[0], y[1], y[2]);
    const auto now = elliptic_invariants(w);
    const auto ref = elliptic_invariants(w, &w0);
    drift = std::max({drift, std::abs(now.A - inv0.A), std::abs(now.B - inv0.B)});
    rel = std::max(rel, ref.residual_H_rel);
    abs_res = std::max(abs_res, ref.residual_H);
  }
  const State& end = tr.states().back();
  rec.put("results.w_final", std::vector<double>{end[0], end[1], end[2]});
  rec.put("results.A", inv0.A);
  rec.put("results.B", inv0.B);
  rec.put("results.betas", std::vector<double>{inv0.beta1, inv0.beta2, inv0.beta3});
  rec.put("results.steps", tr.size());
  rec.put("diagnostics.triangle_residual_abs", abs_res);
  rec.check("invariant_drift", drift, c.tol(1e-10));
  rec.check("triangle_residual_rel", rel, c.tol(1e-8));
  rec.table({"s", "w1", "w2", "w3"});
  const int n = a.samples > 1 ? a.samples : static_cast<int>(tr.size());
  for (int k = 0; k < n; ++k) {
    const double t = a.samples > 1 ? a.s0 + (s1 - a.s0) * k / (n - 1) : tr.params()[static_cast<std::size_t>(k)];
    const State y = tr.at(t);
    rec.row({t, y[0], y[1], y[2]});
  }
}

inline void nahm_check(const std::string& flow, const FlowArgs& a, double ea, const Common& c, Record& rec) {
  const Settings s = c.settings();
  const auto grid = angle_grid(8, 8);
  rec.put("inputs.flow", flow);
  double residual = 0.0;
  Vec3 w0;
  if (flow == "eh") {
    const double rho0 = a.w0.empty() ? 2.0 : a.w0.at(0);
    if (!(rho0 > ea)) throw ConfigurationError("eh flow needs rho0 > a");
    const double sb = eguchi_hanson_blowup(rho0, ea);
    FlowSource src = [sb, ea](double t) { return eguchi_hanson_flow(t, ea, sb); };
    residual = nahm_residual(src, {0.0, 0.3 * sb, 0.6 * sb}, grid, s.fd_step);
    const double q = std::sqrt(rho0 * rho0 - ea * ea);
    w0 = Vec3(q, q, rho0);
    rec.put("inputs.a", ea);
    rec.put("inputs.rho0", rho0);
  } else if (flow == "flat") {
    FlowSource src = [](double t) { return flat_flow(t); };
    residual = nahm_residual(src, {0.0, 0.25, 0.5}, grid, s.fd_step);
    w0 = Vec3(1, 1, 1);
  } else {
    w0 = detail::to_vec3(a.w0, "--w0");
    const double sb = euler_blowup(w0);
    const double s1 = std::isfinite(sb) ? 0.5 * sb : 1.0;
    residual = nahm_residual(euler_flow(w0, 0.0, s1, s.ode_tol), grid, s.fd_step);
    rec.put("inputs.w0", a.w0);
  }
  const EulerFlow ev(w0);
  auto x = [&](const Eigen::VectorXd& q) {
    const Vec3 w = ev.w(q[0]);
    const Vec3 h = sphere_hamiltonians({std::acos(q[2]), q[1]});
    return Eigen::VectorXd(w.cwiseProduct(h));
  };
  double nambu = 0.0;
  for (const auto& at : {Eigen::Vector3d(0.0, 0.7, 0.3), Eigen::Vector3d(0.02, 2.1, -0.5), Eigen::Vector3d(-0.03, 4.0, 0.8)})
    nambu = std::max(nambu, nambu_residual(x, Eigen::VectorXd(at), s.fd()).max_abs);
  rec.put("inputs.grid", "8x8");
  rec.check("nahm_residual", residual, c.tol(1e-8));
  rec.check("nambu_residual", nambu, c.tol(1e-6));
}

struct TwistorArgs {
  std::string kernel = "inv_mu";
  std::string kernel_json;
  std::vector<std::vector<double>> points;
  std::string transform = "penrose";
  std::vector<double> center;
  std::optional<double> radius;
  std::string orientation = "ccw";
  bool laplacian = false;

  void attach(CLI::App* app, bool with_transform) {
    app->add_option("--kernel", kernel, "built-in kernel name");
    app->add_option("--kernel-json", kernel_json, "declarative rational kernel (JSON)");
    app->add_option("--point", points, "comma-separated 3-point (repeatable)")->delimiter(',')->required()
        ->allow_extra_args(false);
    app->add_option("--contour-center", center, "re,im of a manual contour")->delimiter(',');
    app->add_option("--contour-radius", radius, "radius of a manual contour");
    app->add_option("--orientation", orientation, "ccw or cw")->check(CLI::IsMember({"ccw", "cw"}));
    if (with_transform) {
      app->add_option("--transform", transform, "penrose or dilation")->check(CLI::IsMember({"penrose", "dilation"}));
      app->add_flag("--laplacian", laplacian, "also check the FD Laplacian of the transform");
    }
  }

  TwistorKernel make_kernel() const { return kernel_json.empty() ? kernels::by_name(kernel) : parse_kernel_json(kernel_json); }

  std::optional<Contour> manual() const {
    if (center.empty() && !radius) return std::nullopt;
    if (center.size() != 2 || !radius) throw ConfigurationError("manual contour needs --contour-center re,im and --contour-radius");
    Contour ct{cplx(center[0], center[1]), *radius};
    ct.orientation = orientation == "cw" ? Orientation::clockwise : Orientation::counterclockwise;
    ct.validate();
    return ct;
  }
};

inline void put_contour(Record& rec, const std::string& p, const Contour& ct) {
  rec.put_complex(p + "center", ct.center);
  rec.put(p + "radius", ct.radius);
  rec.put(p + "orientation", ct.orientation == Orientation::clockwise ? "cw" : "ccw");
}

inline void twistor(const TwistorArgs& a, const Common& c, Record& rec) {
  const Settings s = c.settings();
  const TwistorKernel F = a.make_kernel();
  rec.put("inputs.kernel", F.name);
  rec.put("inputs.transform", a.transform);
  rec.put("inputs.contour_rule", to_string(F.rule));
  const auto manual = a.manual();
  double lap = 0.0;
  rec.table({"x1", "x2", "x3", "re", "im"});
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    const Eigen::Vector3d x = detail::to_vec3(a.points[k], "--point");
    const std::string p = a.points.size() == 1 ? "" : std::to_string(k) + ".";
    Contour ct;
    if (manual) {
      ct = *manual;
      rec.put("diagnostics." + p + "contour.placement", "manual");
    } else {
      const auto placed = auto_contour(IncidenceSection(x), F);
      ct = placed.contour;
      rec.put("diagnostics." + p + "contour.placement", placed.heuristic);
      rec.put("diagnostics." + p + "contour.clearance", placed.clearance);
    }
    put_contour(rec, "diagnostics." + p + "contour.", ct);
    auto eval = [&](const Eigen::Vector3d& y, const Contour& cc) {
      return a.transform == "penrose" ? penrose_transform(F, y, cc) : dilation_transform(F, y, cc);
    };
    const cplx v = eval(x, ct);
    rec.put_complex("results." + p + "value", v);
    rec.row({x[0], x[1], x[2], v.real(), v.imag()});
    if (a.laplacian) {
      auto field = [&](const Eigen::VectorXd& y) {
        const Eigen::Vector3d yy(y);
        return eval(yy, manual ? *manual : auto_contour(IncidenceSection(yy), F).contour);
      };
      const double l = std::abs(fd_laplacian(field, Eigen::VectorXd(x), s.fd()).laplacian);
      rec.put("results." + p + "laplacian_abs", l);
      lap = std::max(lap, l);
    }
  }
  if (a.laplacian) rec.check("laplacian", lap, c.tol(1e-5));
}

inline void phi_monopole(const TwistorArgs& a, const Common& c, Record& rec) {
  const Settings s = c.settings();
  TwistorArgs args = a;
  if (args.kernel == "inv_mu" && args.kernel_json.empty()) args.kernel = "neg_log_mu";
  const TwistorKernel f = args.make_kernel();
  rec.put("inputs.kernel", f.name);
  double worst = 0.0;
  for (std::size_t k = 0; k < args.points.size(); ++k) {
    const Eigen::Vector3d x = detail::to_vec3(args.points[k], "--point");
    const std::string p = args.points.size() == 1 ? "results." : "results." + std::to_string(k) + ".";
    const auto placed = auto_contour(IncidenceSection(x), f, f.rule != ContourRule::enclose_origin);
    put_contour(rec, "diagnostics." + (args.points.size() == 1 ? std::string() : std::to_string(k) + ".") + "contour.",
                placed.contour);
    const PhiMatrix phi = phi_matrix(f, x, placed.contour);
    rec.put_complex(p + "Vhat", phi.Vhat);
    for (int i = 0; i < 3; ++i) rec.put_complex(p + "A" + std::to_string(i + 1), phi.A[i]);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rec.put_complex(p + "phi" + std::to_string(i) + std::to_string(j), phi.components(i, j));
    const auto m = phi_monopole_residual(f, x, s.fd());
    rec.put(p + "monopole_residual", m.max_abs);
    worst = std::max(worst, m.max_abs);
  }
  rec.check("monopole", worst, c.tol(1e-5));
}

struct CurvatureArgs {
  std::string chart = "eh";
  double a = 1.0;
  std::vector<double> point;
  std::vector<double> w0;

  void attach(CLI::App* app) {
    app->add_option("--chart", chart, "eh, flat, sphere4, bgpp, gh-one, gh-eh")
        ->check(CLI::IsMember({"eh", "flat", "sphere4", "bgpp", "gh-one", "gh-eh"}));
    app->add_option("--a", a, "Eguchi-Hanson parameter");
    app->add_option("--point", point, "4-point in chart coordinates")->delimiter(',')->required();
    app->add_option("--w0", w0, "initial Euler state for --chart bgpp")->delimiter(',');
  }
};

inline void curvature(const CurvatureArgs& a, const Common& c, Record& rec) {
  const Settings s = c.settings();
  const Vec4 p = detail::to_vec4(a.point, "--point");
  MetricChart chart;
  double expect = 0.0;  // Ric = expect * g
  if (a.chart == "eh") {
    chart = eguchi_hanson_chart(a.a);
  } else if (a.chart == "flat") {
    chart = flat_polar_chart();
  } else if (a.chart == "sphere4") {
    chart = sphere4_chart();
    expect = 3.0;
  } else if (a.chart == "bgpp") {
    chart = bgpp_metric(flow_source(EulerFlow(a.w0.empty() ? Vec3(1, 1, 1) : detail::to_vec3(a.w0, "--w0"))));
  } else if (a.chart == "gh-one") {
    chart = gh_metric(multi_center({Eigen::Vector3d::Zero()}, {1.0}));
  } else {
    chart = gh_metric(eguchi_hanson_gh(a.a));
  }
  rec.put("inputs.chart", a.chart);
  rec.put("inputs.coords", std::vector<std::string>(chart.coords.begin(), chart.coords.end()));
  rec.put("inputs.point", a.point);
  const auto r = ricci_fd(chart, p, s.fd());
  const Mat4 dev = r.ricci - expect * chart(p);
  rec.put("results.ricci_max_abs", r.max_abs);
  rec.put("results.scalar", r.scalar);
  rec.put("results.expected_einstein_constant", expect);
  rec.check("ricci_deviation", dev.cwiseAbs().maxCoeff(), c.tol(1e-4));
}

inline void eguchi_hanson(double a, const std::vector<std::vector<double>>& points, const Common& c, Record& rec) {
  const Settings s = c.settings();
  const QuadricFamily fam({a * a, a * a, 0.0}, 1.0);
  HProfile prof{fam, Reference::at_infinity, +1, s.quad_tol};
  rec.put("inputs.a", a);
  rec.table({"x1", "x2", "x3", "V", "Vhat", "ellipsoid_residual", "pipeline_V"});
  double ell = 0.0, agree = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Eigen::Vector3d x = detail::to_vec3(points[k], "--point");
    const auto ref = eguchi_hanson_reference(x, a);
    const double pv = eval_V(Eigen::VectorXd(x), prof);
    const std::string p = points.size() == 1 ? "results." : "results." + std::to_string(k) + ".";
    rec.put(p + "V", ref.V);
    rec.put(p + "Vhat", ref.Vhat);
    rec.put(p + "ellipsoid_residual", ref.ellipsoid_residual);
    rec.put(p + "pipeline_V", pv);
    ell = std::max(ell, ref.ellipsoid_residual);
    agree = std::max(agree, std::abs(pv - ref.V) / std::abs(ref.V));
    rec.row({x[0], x[1], x[2], ref.V, ref.Vhat, ref.ellipsoid_residual, pv});
  }
  rec.check("ellipsoid_residual", ell, c.tol(1e-12));
  rec.check("pipeline_rel_err", agree, c.tol(1e-8));
}

inline void suite(bool quick, const std::vector<int>& only, std::uint64_t seed, const Common& c, Record& rec,
                  std::ostream& log) {
  AcceptanceOptions opt;
  opt.quick = quick;
  opt.seed = seed;
  opt.settings = c.settings();
  rec.put("inputs.quick", quick);
  rec.put("inputs.seed", seed);
  rec.table({"criterion", "pass", "checks"});
  int passed = 0, total = 0;
  for (const auto& e : accept::registry()) {
    if (!only.empty() && std::find(only.begin(), only.end(), e.id) == only.end()) continue;
    const auto r = run_criterion(e.id, opt);
    const std::string p = "criteria." + std::to_string(r.id) + ".";
    rec.put(p + "name", r.name);
    for (const auto& ch : r.checks) {
      rec.put(p + ch.name + ".value", ch.value);
      if (ch.gated) rec.put(p + ch.name + ".tol", ch.tol);
    }
    if (!r.error.empty()) rec.put(p + "error", r.error);
    rec.put(p + "pass", r.pass());
    rec.row({static_cast<double>(r.id), r.pass() ? 1.0 : 0.0, static_cast<double>(r.checks.size())});
    log << format_line(r) << "\n";
    passed += r.pass() ? 1 : 0;
    ++total;
  }
  rec.check("criteria_failed", static_cast<double>(total - passed), 0.5);
  rec.put("results.passed", passed);
  rec.put("results.total", total);
}

}  // namespace commands

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Harmonic functions on central quadrics, Euler/Nahm flows, twistor transforms and hyper-Kahler checks"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);

  Common common;
  Quadric quadric;
  commands::FlowArgs flow;
  commands::TwistorArgs tw;
  commands::CurvatureArgs curv;
  std::string nahm_flow = "general";
  double nahm_a = 1.0, eh_a = 1.0;
  std::vector<std::vector<double>> eh_points;
  bool quick = false;
  std::vector<int> only;
  std::uint64_t seed = AcceptanceOptions{}.seed;

  std::function<void(Record&)> action;
  std::string name;
  auto sub = [&](const char* n, const char* help) {
    CLI::App* s = app.add_subcommand(n, help);
    common.attach(s);
    return s;
  };

  auto* ev = sub("eval-v", "evaluate V, H and Vhat at points");
  quadric.attach(ev);
  ev->callback([&] { name = "eval-v"; action = [&](Record& r) { commands::eval_v(quadric, common, r); }; });

  auto* vl = sub("verify-laplace", "FD Laplacian and scaling identity of V at points");
  Quadric quadric2;
  quadric2.attach(vl);
  vl->callback([&] { name = "verify-laplace"; action = [&](Record& r) { commands::verify_laplace(quadric2, common, r); }; });

  auto* ef = sub("euler-flow", "integrate the Euler equations and check the invariants");
  flow.attach(ef);
  ef->callback([&] { name = "euler-flow"; action = [&](Record& r) { commands::euler_flow_cmd(flow, common, r); }; });

  auto* nc = sub("nahm-check", "Nahm bracket and Nambu residuals of x_i = w_i h_i");
  commands::FlowArgs flow2;
  nc->add_option("--flow", nahm_flow, "eh, flat or general")->check(CLI::IsMember({"eh", "flat", "general"}));
  nc->add_option("--a", nahm_a, "Eguchi-Hanson parameter");
  nc->add_option("--w0", flow2.w0, "w1,w2,w3 for general flows; rho0 for eh")->delimiter(',');
  nc->callback([&] {
    name = "nahm-check";
    if (nahm_flow == "general" && flow2.w0.size() != 3) throw CLI::ValidationError("--w0", "general flow needs --w0 w1,w2,w3");
    action = [&](Record& r) { commands::nahm_check(nahm_flow, flow2, nahm_a, common, r); };
  });

  auto* tws = sub("twistor", "Penrose or dilation transform of a twistor kernel");
  tw.attach(tws, true);
  tws->callback([&] { name = "twistor"; action = [&](Record& r) { commands::twistor(tw, common, r); }; });

  auto* pm = sub("phi-monopole", "Phi matrix, (Vhat, A) and the monopole residual");
  commands::TwistorArgs tw2;
  tw2.attach(pm, false);
  pm->callback([&] { name = "phi-monopole"; action = [&](Record& r) { commands::phi_monopole(tw2, common, r); }; });

  auto* cv = sub("curvature", "Ricci tensor of a chart by nested finite differences");
  curv.attach(cv);
  cv->callback([&] { name = "curvature"; action = [&](Record& r) { commands::curvature(curv, common, r); }; });

  auto* eh = sub("eguchi-hanson", "closed-form Eguchi-Hanson potentials against the quadric pipeline");
  eh->add_option("--a", eh_a, "parameter a")->check(CLI::PositiveNumber);
  eh->add_option("--point", eh_points, "comma-separated 3-point (repeatable)")->delimiter(',')->required()
      ->allow_extra_args(false);
  eh->callback([&] { name = "eguchi-hanson"; action = [&](Record& r) { commands::eguchi_hanson(eh_a, eh_points, common, r); }; });

  auto* st = sub("suite", "run the acceptance criteria");
  st->add_flag("--quick", quick, "reduced sample counts");
  st->add_option("--only", only, "criterion ids")->delimiter(',')->check(CLI::Range(1, 12));
  st->add_option("--seed", seed, "random seed");
  st->callback([&] { name = "suite"; action = [&](Record& r) { commands::suite(quick, only, seed, common, r, err); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << version << "\n";
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return usage;
  }

  Record rec(name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    action(rec);
  } catch (const ConfigurationError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const Error& e) {
    rec.fail(e);
  } catch (const std::exception& e) {
    rec.fail(NumericalFailure(e.what()));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string text = common.output == "csv" ? rec.csv(seconds) : rec.json(seconds);
  if (common.out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(common.out_path);
    if (!f) {
      err << "error: cannot write " << common.out_path << "\n";
      return usage;
    }
    f << text;
  }
  return rec.passed() ? ok : check_failed;
}

}  // namespace qh::cli
