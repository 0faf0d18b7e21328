#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/hopf.hpp"
#include "bonnetlab/invariants.hpp"
#include "bonnetlab/surface.hpp"
#include "json.hpp"

namespace bonnetlab {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

struct GallerySourceSpec {
  std::string name;
  std::map<std::string, double> params;
};

struct TableSourceSpec {
  std::string path;
  bool has_derivatives = false;
};

struct ChartSpec {
  std::string name;
  std::optional<ChartGrid> grid;  // gallery sources may fall back to the default
  std::optional<GallerySourceSpec> gallery;
  std::optional<TableSourceSpec> table;
  std::optional<bool> compact, simply_connected;
  std::optional<double> tol_conf;
};

ChartSpec parse_chart_spec(const std::string& text);
ChartSpec read_chart_spec(const std::string& path);

// a chart bound to a grid; gallery-backed handles can be resampled at any grid
struct ChartHandle {
  std::string name;
  ChartGrid grid;
  std::optional<GalleryChart> analytic;
  std::optional<TableSourceSpec> table;
  ChartMetadata metadata;
  double tol_conf = 1e-6;

  bool resamplable() const { return analytic.has_value(); }
  ImmersionSample sample(Scheme scheme) const;
  ImmersionSample sample_at(const ChartGrid& g, Scheme scheme) const;
  ordered_json source_echo() const;
};

ChartHandle resolve_chart(const ChartSpec& spec);
ChartHandle resolve_gallery(const std::string& name,
                            const std::map<std::string, double>& params);

struct Analysis {
  Scheme scheme = Scheme::SpectralAuto;
  ConformalInvariants ci;
  StructureStats stats;
  LogHopfDerivatives lh;
  Classification cl;
  BonnetVerdict verdict;
};

Analysis run_analysis(const ImmersionSample& s, Scheme scheme);

ordered_json grid_json(const ChartGrid& g);
ordered_json build_report(const ChartHandle& chart, const Analysis& a);
ordered_json mate_report_block(double theta, const Analysis& base,
                               const ConformalInvariants& mate,
                               const DeformationDifferential& dq);

// named fields: u, H, h, K, deltag; each written to <dir>/<field>.csv
void dump_fields(const Analysis& a, const std::vector<std::string>& fields,
                 const std::string& dir);

// empty path means stdout; files get a trailing newline either way
void write_json(const ordered_json& j, const std::string& path);

struct ConvergeRow {
  std::string quantity;
  std::string source;  // "chart" or "benchmark"
  std::vector<double> errors;
  std::vector<double> orders;
};

struct ConvergeStudy {
  std::vector<std::string> level_labels;
  std::vector<ConvergeRow> rows;
  std::vector<std::string> notes;
};

// per-level residual maxima and observed orders; gallery charts refine the
// base grid, table charts run on decimations of the tabulated grid, and the
// candidate-rotation rows fall back to the built-in benchmark family when the
// chart itself has no usable rotation support
ConvergeStudy converge_study(const ChartHandle& chart, Scheme scheme, int levels);
ordered_json converge_json(const ConvergeStudy& st);
std::string converge_table(const ConvergeStudy& st);

}  // namespace bonnetlab
