#include "bonnetlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bonnetlab/errors.hpp"

namespace bonnetlab {

namespace {

const ordered_json& need(const ordered_json& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(std::string("chart spec: missing '") + key + "' in " + ctx);
  return *it;
}

double need_num(const ordered_json& j, const char* key, const char* ctx) {
  const auto& v = need(j, key, ctx);
  if (!v.is_number())
    throw SchemaError(std::string("chart spec: '") + key + "' in " + ctx + " must be a number");
  return v.get<double>();
}

int need_int(const ordered_json& j, const char* key, const char* ctx) {
  const auto& v = need(j, key, ctx);
  if (!v.is_number_integer())
    throw SchemaError(std::string("chart spec: '") + key + "' in " + ctx + " must be an integer");
  return v.get<int>();
}

bool need_bool(const ordered_json& j, const char* key, const char* ctx) {
  const auto& v = need(j, key, ctx);
  if (!v.is_boolean())
    throw SchemaError(std::string("chart spec: '") + key + "' in " + ctx + " must be a boolean");
  return v.get<bool>();
}

std::string need_str(const ordered_json& j, const char* key, const char* ctx) {
  const auto& v = need(j, key, ctx);
  if (!v.is_string())
    throw SchemaError(std::string("chart spec: '") + key + "' in " + ctx + " must be a string");
  return v.get<std::string>();
}

std::string res_label(const ChartGrid& g) {
  return std::to_string(g.nx) + "x" + std::to_string(g.ny);
}

ordered_json stats_json(const RealField& f) {
  double mn = f.v.empty() ? 0 : f.v[0];
  double mx = mn, mean = 0;
  for (double v : f.v) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    mean += v;
  }
  if (!f.v.empty()) mean /= double(f.v.size());
  return {{"min", mn}, {"max", mx}, {"mean", mean}};
}

}  // namespace

ChartSpec parse_chart_spec(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("chart spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("chart spec must be a JSON object");

  ChartSpec spec;
  spec.name = need_str(j, "name", "chart spec");

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (!g.is_object()) throw SchemaError("chart spec: 'grid' must be an object");
    spec.grid = make_grid(need_num(g, "x0", "grid"), need_num(g, "x1", "grid"),
                          need_num(g, "y0", "grid"), need_num(g, "y1", "grid"),
                          need_int(g, "nx", "grid"), need_int(g, "ny", "grid"),
                          need_bool(g, "periodic_x", "grid"), need_bool(g, "periodic_y", "grid"));
  }

  const auto& src = need(j, "source", "chart spec");
  if (!src.is_object()) throw SchemaError("chart spec: 'source' must be an object");
  bool has_gal = src.contains("gallery"), has_tab = src.contains("table");
  if (has_gal == has_tab)
    throw SchemaError("chart spec: source must hold exactly one of 'gallery' or 'table'");
  if (has_gal) {
    const auto& gl = src["gallery"];
    if (!gl.is_object()) throw SchemaError("chart spec: 'source.gallery' must be an object");
    GallerySourceSpec gs;
    gs.name = need_str(gl, "name", "source.gallery");
    if (gl.contains("params")) {
      const auto& p = gl["params"];
      if (!p.is_object()) throw SchemaError("chart spec: 'params' must be an object");
      for (auto it = p.begin(); it != p.end(); ++it) {
        if (!it.value().is_number())
          throw SchemaError("chart spec: parameter '" + it.key() + "' must be numeric");
        gs.params[it.key()] = it.value().get<double>();
      }
    }
    spec.gallery = gs;
  } else {
    const auto& tb = src["table"];
    if (!tb.is_object()) throw SchemaError("chart spec: 'source.table' must be an object");
    TableSourceSpec ts;
    ts.path = need_str(tb, "path", "source.table");
    if (tb.contains("has_derivatives")) ts.has_derivatives = need_bool(tb, "has_derivatives", "source.table");
    spec.table = ts;
  }

  if (j.contains("metadata")) {
    const auto& m = j["metadata"];
    if (!m.is_object()) throw SchemaError("chart spec: 'metadata' must be an object");
    if (m.contains("compact")) spec.compact = need_bool(m, "compact", "metadata");
    if (m.contains("simply_connected"))
      spec.simply_connected = need_bool(m, "simply_connected", "metadata");
  }

  if (j.contains("tol_conf")) {
    const auto& t = j["tol_conf"];
    if (!t.is_number() || !(t.get<double>() > 0))
      throw SchemaError("chart spec: 'tol_conf' must be a positive number");
    spec.tol_conf = t.get<double>();
  }
  return spec;
}

ChartSpec read_chart_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("cannot open chart spec: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  ChartSpec spec = parse_chart_spec(ss.str());
  if (spec.table && !spec.table->path.empty()) {
    std::filesystem::path tp(spec.table->path);
    if (tp.is_relative())
      spec.table->path = (std::filesystem::path(path).parent_path() / tp).string();
  }
  return spec;
}

ImmersionSample ChartHandle::sample(Scheme scheme) const { return sample_at(grid, scheme); }

ImmersionSample ChartHandle::sample_at(const ChartGrid& g, Scheme scheme) const {
  ImmersionSample s;
  if (analytic) {
    s = sample_chart(*analytic, g);
  } else if (table) {
    s = ingest_table(g, metadata, table->path, table->has_derivatives, scheme, tol_conf);
  } else {
    throw SchemaError("chart handle has no source");
  }
  s.metadata = metadata;
  s.tol_conf = tol_conf;
  return s;
}

ordered_json ChartHandle::source_echo() const {
  ordered_json src = ordered_json::object();
  if (analytic) {
    ordered_json params = ordered_json::object();
    for (const auto& [k, v] : analytic->params) params[k] = v;
    src["gallery"] = {{"name", analytic->name}, {"params", params}};
  } else if (table) {
    src["table"] = {{"path", table->path}, {"has_derivatives", table->has_derivatives}};
  }
  return src;
}

ChartHandle resolve_chart(const ChartSpec& spec) {
  if (spec.gallery && spec.table) throw SchemaError("chart spec has two sources");
  if (!spec.gallery && !spec.table)
    throw SchemaError("chart spec needs a gallery or table source");

  ChartHandle h;
  if (spec.gallery) {
    GalleryChart c = gallery_chart(spec.gallery->name, spec.gallery->params);
    h.grid = spec.grid.value_or(c.default_grid);
    h.metadata = c.metadata;
    h.tol_conf = spec.tol_conf.value_or(c.tol_conf);
    h.name = spec.name.empty() ? c.name : spec.name;
    h.analytic = std::move(c);
  } else {
    if (!spec.grid) throw SchemaError("chart spec: table sources need an explicit grid");
    h.table = *spec.table;
    h.grid = *spec.grid;
    h.metadata.compact = h.grid.compact();
    h.metadata.simply_connected = !h.grid.compact();
    h.tol_conf = spec.tol_conf.value_or(1e-6);
    h.name = spec.name;
  }
  if (spec.compact) h.metadata.compact = *spec.compact;
  if (spec.simply_connected) h.metadata.simply_connected = *spec.simply_connected;
  return h;
}

ChartHandle resolve_gallery(const std::string& name,
                            const std::map<std::string, double>& params) {
  ChartSpec spec;
  spec.name = name;
  spec.gallery = GallerySourceSpec{name, params};
  return resolve_chart(spec);
}

Analysis run_analysis(const ImmersionSample& s, Scheme scheme) {
  Analysis a;
  a.scheme = scheme;
  Deriv d(s.grid, scheme);
  a.ci = conformal_invariants(s);
  a.stats = structure_stats(a.ci, d);
  a.lh = log_hopf_derivatives(a.ci, d);
  a.cl = classify(a.ci, a.lh, d);
  a.verdict = theorem_verdict(s.metadata.compact, s.metadata.simply_connected,
                              a.lh.report.discrete, a.cl);
  return a;
}

ordered_json grid_json(const ChartGrid& g) {
  return {{"x0", g.x0}, {"x1", g.x1}, {"y0", g.y0}, {"y1", g.y1},
          {"nx", g.nx}, {"ny", g.ny},
          {"periodic_x", g.periodic_x}, {"periodic_y", g.periodic_y}};
}

ordered_json build_report(const ChartHandle& chart, const Analysis& a) {
  const std::string res = res_label(a.ci.grid);
  const std::string sch = scheme_name(a.scheme);
  bool analytic_jets = chart.analytic || (chart.table && chart.table->has_derivatives);

  ordered_json rep;
  rep["tool_version"] = kToolVersion;
  rep["chart"] = {{"name", chart.name},
                  {"source", chart.source_echo()},
                  {"grid", grid_json(a.ci.grid)},
                  {"metadata",
                   {{"compact", a.ci.metadata.compact},
                    {"simply_connected", a.ci.metadata.simply_connected},
                    {"notes", a.ci.metadata.notes}}},
                  {"derivative_source", analytic_jets ? "analytic" : "numerical"},
                  {"conformality_residual", a.ci.conformality_residual},
                  {"tol_conf", a.ci.tol_conf}};
  rep["scheme"] = sch;
  rep["invariants"] = {{"grid", res},
                       {"scheme", sch},
                       {"u", stats_json(a.ci.u)},
                       {"H", stats_json(a.ci.H)},
                       {"abs_h", stats_json(abs_field(a.ci.h))},
                       {"K", stats_json(a.ci.K)}};
  rep["residuals"] = {{"grid", res},
                      {"scheme", sch},
                      {"gauss_max", a.stats.gauss_max},
                      {"codazzi_max", a.stats.codazzi_max}};
  rep["classification"] = {{"grid", res},
                           {"scheme", sch},
                           {"kind", kind_name(a.cl.kind)},
                           {"floor", a.cl.floor},
                           {"max_delta_g", a.cl.max_delta_g},
                           {"above_floor_fraction", a.cl.above_floor_fraction},
                           {"positive_fraction", a.cl.positive_fraction},
                           {"negative_fraction", a.cl.negative_fraction},
                           {"nonconstancy", a.cl.nonconstancy},
                           {"detail", a.cl.detail},
                           {"umbilic",
                            {{"masked_count", a.lh.report.masked_count},
                             {"component_count", a.lh.report.component_count},
                             {"largest_component", a.lh.report.largest_component},
                             {"discrete", a.lh.report.discrete},
                             {"totally_umbilic", a.lh.report.totally_umbilic},
                             {"threshold", a.lh.report.threshold}}}};
  rep["verdict"] = {{"verdict", a.verdict.verdict},
                    {"narrative", a.verdict.narrative},
                    {"hypotheses", a.verdict.hypotheses}};
  rep["thresholds"] = {{"tol_conf", a.ci.tol_conf},
                       {"tol_umb", kDefaultTolUmb},
                       {"umbilic_threshold", a.lh.report.threshold},
                       {"discrete_component_max_nodes", kDiscreteComponentMax},
                       {"structure_floor", a.cl.floor},
                       {"sign_fraction_gate", kSignFractionGate},
                       {"cmc_nonconstancy_gate", kCmcNonconstancyGate},
                       {"nonconstancy_tol", kDefaultNonconstancyTol}};
  return rep;
}

ordered_json mate_report_block(double theta, const Analysis& base,
                               const ConformalInvariants& mate,
                               const DeformationDifferential& dq) {
  const ConformalInvariants& ci = base.ci;
  size_t n = dq.F.v.size();
  cplx fmean(0, 0);
  for (const cplx& v : dq.F.v) fmean += v;
  if (n) fmean /= double(n);
  double du = 0, dH = 0, fmax = 0, fdev = 0, wmax = 0;
  for (size_t k = 0; k < n; ++k) {
    du = std::max(du, std::abs(ci.u.v[k] - mate.u.v[k]));
    dH = std::max(dH, std::abs(ci.H.v[k] - mate.H.v[k]));
    fmax = std::max(fmax, std::abs(dq.F.v[k]));
    fdev = std::max(fdev, std::abs(dq.F.v[k] - fmean));
    wmax = std::max(wmax, ci.e2u.v[k] * std::abs(ci.h.v[k]));
  }
  bool congruent = fmax <= 1e-12 * std::max(1.0, wmax);

  ordered_json blk;
  blk["theta"] = theta;
  blk["u_agreement_max"] = du;
  blk["H_agreement_max"] = dH;
  blk["F_mean"] = {{"re", fmean.real()}, {"im", fmean.imag()}};
  blk["F_max"] = fmax;
  blk["F_constancy_deviation"] = fdev;
  blk["holomorphy_residual"] = dq.holomorphy_residual;
  blk["modulus_residual"] = dq.modulus_residual;
  blk["congruent"] = congruent;
  blk["invariants"] = {{"grid", res_label(mate.grid)},
                       {"scheme", scheme_name(base.scheme)},
                       {"u", stats_json(mate.u)},
                       {"H", stats_json(mate.H)},
                       {"abs_h", stats_json(abs_field(mate.h))},
                       {"K", stats_json(mate.K)}};
  return blk;
}

void dump_fields(const Analysis& a, const std::vector<std::string>& fields,
                 const std::string& dir) {
  if (fields.empty()) return;
  for (const std::string& f : fields)
    if (f != "u" && f != "H" && f != "h" && f != "K" && f != "deltag")
      throw SchemaError("unknown field '" + f + "' (expected u, H, h, K, deltag)");
  std::filesystem::path root(dir.empty() ? "." : dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw SchemaError("cannot create dump directory " + root.string() + ": " + ec.message());
  for (const std::string& f : fields) {
    std::string path = (root / (f + ".csv")).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SchemaError("cannot write field dump: " + path);
    if (f == "u") write_field_csv(os, a.ci.grid, a.ci.u);
    else if (f == "H") write_field_csv(os, a.ci.grid, a.ci.H);
    else if (f == "h") write_field_csv(os, a.ci.grid, a.ci.h);
    else if (f == "K") write_field_csv(os, a.ci.grid, a.ci.K);
    else write_field_csv(os, a.ci.grid, a.lh.delta_g);
  }
}

void write_json(const ordered_json& j, const std::string& path) {
  std::string text = j.dump(2);
  text += "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SchemaError("cannot write report: " + path);
  os << text;
}

namespace {

// non-periodic window around the image of the chart centre under w = z + 0.1 z^2,
// shrunk until enough nodes map back inside the chart
double reparam_difference(const GalleryChart& chart, const ChartGrid& zgrid, Scheme scheme,
                          double tol_conf) {
  Reparam phi = quadratic_reparam(0.1);
  double Lx = zgrid.x1 - zgrid.x0, Ly = zgrid.y1 - zgrid.y0;
  cplx c(zgrid.x0 + 0.5 * Lx, zgrid.y0 + 0.5 * Ly);
  cplx wc = c + 0.1 * c * c;
  double mag = std::abs(cplx(1.0, 0.0) + 0.2 * c);
  double sx = 0.25 * Lx * mag, sy = 0.25 * Ly * mag;
  std::string last = "no reparametrization window fits inside the chart";
  for (int attempt = 0; attempt < 4; ++attempt) {
    ChartGrid w = make_grid(wc.real() - 0.5 * sx, wc.real() + 0.5 * sx, wc.imag() - 0.5 * sy,
                            wc.imag() + 0.5 * sy, zgrid.nx, zgrid.ny, false, false);
    try {
      return chart_invariance_check(chart.eval, zgrid, phi, w, scheme, tol_conf).max_difference;
    } catch (const PreconditionError& e) {
      last = e.what();
      sx *= 0.5;
      sy *= 0.5;
    }
  }
  throw PreconditionError(last);
}

std::vector<double> orders_of(const std::vector<double>& e) {
  std::vector<double> out;
  for (size_t i = 0; i + 1 < e.size(); ++i) out.push_back(std::log2(e[i] / e[i + 1]));
  return out;
}

// residuals this small are roundoff plateaus, not truncation decay; thin
// conformal factors amplify rounding into the 1e-10 range on desk grids
bool order_converged(const ConvergeRow& row, size_t i) {
  return row.errors[i + 1] < 1e-9 || !std::isfinite(row.orders[i]);
}

}  // namespace

ConvergeStudy converge_study(const ChartHandle& chart, Scheme scheme, int levels) {
  if (levels < 2) throw SchemaError("converge needs at least 2 levels");

  std::vector<ChartGrid> grids;
  std::vector<ImmersionSample> samples;  // table path only; coarsest first
  if (chart.resamplable()) {
    ChartGrid g = chart.grid;
    for (int k = 0; k < levels; ++k) {
      grids.push_back(g);
      g = g.refined(2);
    }
  } else {
    ImmersionSample full = chart.sample(scheme);
    for (int k = levels - 1; k >= 0; --k)
      samples.push_back(decimate_sample(full, 1 << k, scheme));
    for (const ImmersionSample& s : samples) grids.push_back(s.grid);
  }

  ConvergeStudy st;
  for (const ChartGrid& g : grids) st.level_labels.push_back(res_label(g));

  std::vector<double> gauss, codazzi, invariance, r3, lapr;
  bool have_invariance = chart.resamplable();
  std::string invariance_note;
  bool chart_candidate = true;
  for (int k = 0; k < levels; ++k) {
    ImmersionSample s = chart.resamplable() ? chart.sample_at(grids[k], scheme) : samples[k];
    ConformalInvariants ci = conformal_invariants(s);
    Deriv d(s.grid, scheme);
    StructureStats ss = structure_stats(ci, d);
    gauss.push_back(ss.gauss_max);
    codazzi.push_back(ss.codazzi_max);
    if (have_invariance) {
      try {
        invariance.push_back(reparam_difference(*chart.analytic, grids[k], scheme, chart.tol_conf));
      } catch (const PreconditionError& e) {
        have_invariance = false;
        invariance_note = e.what();
      }
    }
    if (chart_candidate) {
      LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
      CandidateRotation cr = candidate_mate_rotation(lh, structure_floor(ci, d));
      try {
        MateResiduals mr = mate_consistency_residuals(lh, cr, d);
        r3.push_back(mr.r3_max);
        lapr.push_back(mr.drpdg_max);
      } catch (const PreconditionError&) {
        chart_candidate = false;
      }
    }
  }

  std::string cand_source = "chart";
  if (!chart_candidate) {
    cand_source = "benchmark";
    r3.clear();
    lapr.clear();
    int n = 64;
    std::string span;
    for (int k = 0; k < levels; ++k, n *= 2) {
      ConformalInvariants ci = rotation_benchmark_chart(n);
      Deriv d(ci.grid, scheme);
      LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
      CandidateRotation cr = candidate_mate_rotation(lh, 1e-8);
      MateResiduals mr = mate_consistency_residuals(lh, cr, d);
      r3.push_back(mr.r3_max);
      lapr.push_back(mr.drpdg_max);
      span += (k ? " -> " : "") + res_label(ci.grid);
    }
    st.notes.push_back("candidate rows use the built-in rotation benchmark on " + span +
                       "; this chart's own rotation is degenerate");
  } else {
    st.notes.push_back("candidate rows measured on the chart's own rotation support");
  }
  if (!chart.resamplable())
    st.notes.push_back("dg-invariance skipped: table sources carry no analytic evaluator");
  else if (!have_invariance)
    st.notes.push_back("dg-invariance skipped: " + invariance_note);

  st.rows.push_back({"gauss", "chart", gauss, orders_of(gauss)});
  st.rows.push_back({"codazzi", "chart", codazzi, orders_of(codazzi)});
  if (have_invariance)
    st.rows.push_back({"dg-invariance", "chart", invariance, orders_of(invariance)});
  st.rows.push_back({"candidate-r3", cand_source, r3, orders_of(r3)});
  st.rows.push_back({"candidate-laplace-r", cand_source, lapr, orders_of(lapr)});
  return st;
}

ordered_json converge_json(const ConvergeStudy& st) {
  ordered_json j;
  j["tool_version"] = kToolVersion;
  j["levels"] = st.level_labels;
  ordered_json rows = ordered_json::array();
  for (const ConvergeRow& row : st.rows) {
    ordered_json orders = ordered_json::array();
    for (size_t i = 0; i < row.orders.size(); ++i) {
      if (order_converged(row, i))
        orders.push_back("converged");
      else
        orders.push_back(row.orders[i]);
    }
    rows.push_back({{"quantity", row.quantity},
                    {"source", row.source},
                    {"errors", row.errors},
                    {"orders", orders}});
  }
  j["rows"] = rows;
  j["notes"] = st.notes;
  return j;
}

std::string converge_table(const ConvergeStudy& st) {
  std::ostringstream os;
  char buf[64];
  os << "quantity                ";
  for (const std::string& l : st.level_labels) {
    std::snprintf(buf, sizeof buf, "%-13s", l.c_str());
    os << buf;
  }
  os << "orders\n";
  for (const ConvergeRow& row : st.rows) {
    std::string name = row.quantity + (row.source == "benchmark" ? " *" : "");
    std::snprintf(buf, sizeof buf, "%-24s", name.c_str());
    os << buf;
    for (double e : row.errors) {
      std::snprintf(buf, sizeof buf, "%-13.3e", e);
      os << buf;
    }
    for (size_t i = 0; i < row.orders.size(); ++i) {
      if (i) os << ", ";
      if (order_converged(row, i)) {
        os << "converged";
      } else {
        std::snprintf(buf, sizeof buf, "%.2f", row.orders[i]);
        os << buf;
      }
    }
    os << "\n";
  }
  for (const std::string& n : st.notes) os << (n.find("benchmark") != std::string::npos ? "* " : "") << n << "\n";
  return os.str();
}

}  // namespace bonnetlab
