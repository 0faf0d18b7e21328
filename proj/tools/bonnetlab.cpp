#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/errors.hpp"
#include "bonnetlab/io.hpp"

using namespace bonnetlab;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct CommonOpts {
  std::string gallery, chart, scheme = "spectral-auto";
  int nx = 0, ny = 0;
  std::vector<std::string> extras;
};

void attach_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--gallery", c.gallery, "gallery entry name");
  sub->add_option("--chart", c.chart, "chart spec JSON file");
  sub->add_option("--scheme", c.scheme, "fd2|fd4|spectral-auto")->capture_default_str();
  sub->add_option("--nx", c.nx, "override grid node count along x");
  sub->add_option("--ny", c.ny, "override grid node count along y");
  sub->allow_extras();  // leftover --NAME VALUE pairs become gallery parameters
}

std::map<std::string, double> parse_extras(const std::vector<std::string>& toks) {
  std::map<std::string, double> out;
  for (size_t i = 0; i < toks.size(); ++i) {
    std::string t = toks[i];
    if (t.rfind("--", 0) != 0) throw SchemaError("unexpected argument '" + t + "'");
    t = t.substr(2);
    std::string key = t, val;
    size_t eq = t.find('=');
    if (eq != std::string::npos) {
      key = t.substr(0, eq);
      val = t.substr(eq + 1);
    } else {
      if (++i >= toks.size()) throw SchemaError("parameter --" + key + " needs a value");
      val = toks[i];
    }
    try {
      size_t pos = 0;
      double v = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
      out[key] = v;
    } catch (...) {
      throw SchemaError("parameter --" + key + " needs a numeric value, got '" + val + "'");
    }
  }
  return out;
}

ChartHandle resolve_common(const CommonOpts& c) {
  if (!c.gallery.empty() && !c.chart.empty())
    throw SchemaError("--gallery and --chart are mutually exclusive");
  std::map<std::string, double> params = parse_extras(c.extras);
  ChartHandle h;
  if (!c.gallery.empty()) {
    h = resolve_gallery(c.gallery, params);
  } else if (!c.chart.empty()) {
    if (!params.empty())
      throw SchemaError("parameter overrides apply to --gallery charts only");
    h = resolve_chart(read_chart_spec(c.chart));
  } else {
    throw SchemaError("pass --gallery NAME or --chart FILE");
  }
  if (c.nx > 0) h.grid.nx = c.nx;
  if (c.ny > 0) h.grid.ny = c.ny;
  h.grid.validate();
  return h;
}

void print_gallery_entry(const GalleryInfo& info) {
  std::cout << info.name << "\n";
  std::cout << "  compact: " << (info.compact ? "yes" : "no") << "\n";
  if (!info.constraint.empty()) std::cout << "  constraint: " << info.constraint << "\n";
  if (!info.notes.empty()) std::cout << "  notes: " << info.notes << "\n";
  for (const GalleryParam& p : info.params) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  --%-8s default %-8g %s", p.name.c_str(), p.value,
                  p.doc.c_str());
    std::cout << buf << "\n";
  }
}

int cmd_gallery(const std::string& name, bool as_json) {
  std::vector<GalleryInfo> entries = gallery_listing();
  if (as_json) {
    ordered_json out = ordered_json::array();
    for (const GalleryInfo& e : entries) {
      if (!name.empty() && e.name != name) continue;
      ordered_json params = ordered_json::array();
      for (const GalleryParam& p : e.params)
        params.push_back({{"name", p.name}, {"default", p.value}, {"doc", p.doc}});
      out.push_back({{"name", e.name},
                     {"params", params},
                     {"constraint", e.constraint},
                     {"compact", e.compact},
                     {"notes", e.notes}});
    }
    if (!name.empty() && out.empty()) throw SchemaError("unknown gallery entry '" + name + "'");
    write_json(out, "");
    return 0;
  }
  if (!name.empty()) {
    for (const GalleryInfo& e : entries)
      if (e.name == name) {
        print_gallery_entry(e);
        return 0;
      }
    throw SchemaError("unknown gallery entry '" + name + "'");
  }
  for (const GalleryInfo& e : entries) {
    char buf[256];
    std::string params;
    for (const GalleryParam& p : e.params) params += (params.empty() ? "" : ", ") + p.name;
    std::snprintf(buf, sizeof buf, "%-24s %-12s %s", e.name.c_str(),
                  params.empty() ? "-" : params.c_str(), e.notes.c_str());
    std::cout << buf << "\n";
  }
  return 0;
}

std::string verdict_line(const Analysis& a) {
  const std::string& v = a.verdict.verdict;
  if (v == "no-mate-theorem-1")
    return "no Bonnet mate (theorem clause 1: compact, H nonconstant, umbilics discrete, "
           "isothermic)";
  if (v == "no-mate-theorem-2")
    return "no Bonnet mate (theorem clause 2: compact, H nonconstant, totally nonisothermic)";
  if (v == "cmc-associate-family-exists")
    return std::string("CMC: associate family exists") +
           (a.ci.metadata.compact ? "" : " (not compact)");
  if (v == "totally-umbilic")
    return "totally umbilic: piece of a round sphere or plane, mates are congruent";
  return "inconclusive: " + a.cl.detail;
}

int cmd_analyze(const CommonOpts& c, const std::string& out,
                const std::vector<std::string>& dump, const std::string& dump_dir) {
  ChartHandle h = resolve_common(c);
  Scheme scheme = parse_scheme(c.scheme);
  Analysis a = run_analysis(h.sample(scheme), scheme);
  write_json(build_report(h, a), out);
  dump_fields(a, dump, dump_dir);
  return 0;
}

int cmd_verdict(const CommonOpts& c, const std::string& out) {
  ChartHandle h = resolve_common(c);
  Scheme scheme = parse_scheme(c.scheme);
  Analysis a = run_analysis(h.sample(scheme), scheme);
  std::cout << verdict_line(a) << "\n";
  write_json(build_report(h, a), out);
  return 0;
}

int cmd_mate(const CommonOpts& c, double theta, const std::string& out) {
  ChartHandle h = resolve_common(c);
  Scheme scheme = parse_scheme(c.scheme);
  Analysis a = run_analysis(h.sample(scheme), scheme);
  Deriv d(a.ci.grid, scheme);
  ConformalInvariants mate = associate_family(a.ci, theta, d);
  DeformationDifferential dq = deformation_differential(a.ci, mate, d);
  ordered_json rep = build_report(h, a);
  rep["mate"] = mate_report_block(theta, a, mate, dq);
  bool congruent = rep["mate"]["congruent"].get<bool>();
  std::ostringstream line;
  line << std::setprecision(17) << "associate mate at theta = " << theta;
  if (congruent)
    line << ": congruent (deformation differential vanishes at rounding)";
  else
    line << ": holomorphy residual " << std::setprecision(3)
         << dq.holomorphy_residual << ", modulus residual " << dq.modulus_residual;
  std::cout << line.str() << "\n";
  write_json(rep, out);
  return 0;
}

int cmd_converge(const CommonOpts& c, int levels, bool as_json) {
  ChartHandle h = resolve_common(c);
  Scheme scheme = parse_scheme(c.scheme);
  ConvergeStudy st = converge_study(h, scheme, levels);
  if (as_json)
    write_json(converge_json(st), "");
  else
    std::cout << converge_table(st);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bonnetlab: conformal invariants of immersed surface charts, isothermic "
      "classification through the delta_g field, Bonnet mate construction and "
      "no-mate verdicts. BONNETLAB_THREADS caps worker threads."};
  app.require_subcommand(1);

  std::string gal_name;
  bool gal_json = false;
  CLI::App* gal = app.add_subcommand("gallery", "list built-in charts");
  gal->add_option("name", gal_name, "entry to describe");
  gal->add_flag("--json", gal_json, "machine-readable listing");

  CommonOpts an_c, ve_c, ma_c, co_c;
  std::string an_out, ve_out, ma_out, an_dump_dir = ".";
  std::vector<std::string> an_dump;
  double ma_theta = kPi;
  int co_levels = 3;
  bool co_json = false;

  CLI::App* an = app.add_subcommand(
      "analyze", "invariants, residuals, classification; JSON report and CSV dumps");
  attach_common(an, an_c);
  an->add_option("--out", an_out, "report file (default stdout)");
  an->add_option("--dump-fields", an_dump, "CSV dumps: u,H,h,K,deltag")->delimiter(',');
  an->add_option("--dump-dir", an_dump_dir, "directory for CSV dumps")->capture_default_str();

  CLI::App* ve = app.add_subcommand("verdict", "full pipeline through the no-mate verdict");
  attach_common(ve, ve_c);
  ve->add_option("--out", ve_out, "report file (default stdout)");

  CLI::App* ma = app.add_subcommand("mate", "rotate the Hopf field of a CMC chart");
  attach_common(ma, ma_c);
  ma->add_option("--theta", ma_theta, "rotation angle in radians")->capture_default_str();
  ma->add_option("--out", ma_out, "report file (default stdout)");

  CLI::App* co = app.add_subcommand("converge", "residual orders under grid refinement");
  attach_common(co, co_c);
  co->add_option("--levels", co_levels, "refinement levels (>= 2)")->capture_default_str();
  co->add_flag("--json", co_json, "machine-readable study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (gal->parsed()) return cmd_gallery(gal_name, gal_json);
    an_c.extras = an->remaining();
    ve_c.extras = ve->remaining();
    ma_c.extras = ma->remaining();
    co_c.extras = co->remaining();
    if (an->parsed()) return cmd_analyze(an_c, an_out, an_dump, an_dump_dir);
    if (ve->parsed()) return cmd_verdict(ve_c, ve_out);
    if (ma->parsed()) return cmd_mate(ma_c, ma_theta, ma_out);
    if (co->parsed()) return cmd_converge(co_c, co_levels, co_json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
