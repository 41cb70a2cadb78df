#pragma once

// CSV / plain-text writers.  Every file is written to a temporary sibling
// and renamed into place.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "logpen/error.hpp"
#include "logpen/experiments.hpp"
#include "logpen/grid.hpp"

namespace logpen {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

inline const char* kSweepHeader = "eps,c_eps,eta,V_eta,sup_outside,a0,equivalent,residual,iters,box_used";

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    os << format_number(r.eps) << ',' << format_number(r.c_eps) << ',';
    os << format_number(r.eta[0]);
    if (r.dim == 2) os << ';' << format_number(r.eta[1]);
    os << ',' << format_number(r.V_eta) << ',' << format_number(r.sup_outside) << ','
       << format_number(r.a0) << ',' << (r.equivalent ? "true" : "false") << ','
       << format_number(r.residual) << ',' << r.iters << ',' << r.box_used << '\n';
  }
  return os.str();
}

inline void write_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw IoError("no sweep rows to write");
  write_atomic(path, sweep_csv(rows));
}

inline nlohmann::json grid_json(const Grid& g) {
  nlohmann::json lo = nlohmann::json::array(), hi = lo, h = lo, n = lo;
  for (int a = 0; a < g.dim; ++a) {
    lo.push_back(g.lo[a]);
    hi.push_back(g.hi[a]);
    h.push_back(g.h[a]);
    n.push_back(g.n[a]);
  }
  return {{"dim", g.dim}, {"lo", lo}, {"hi", hi}, {"h", h}, {"n_cells", n}, {"adjusted", g.adjusted},
          {"layout", "row-major, axis 0 slow; cell centres at lo + (i + 1/2) h"},
          {"columns", g.dim == 1 ? "x,u" : "x,y,u"}};
}

/// One line per cell, `x,u` or `x,y,u`, plus a `<path>.json` sidecar
/// describing the grid.
inline void write_field(const ScalarField& f, const std::filesystem::path& path) {
  std::string text;
  text.reserve(f.size() * 40);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Point x = f.grid.position(k);
    text += format_number(x[0]);
    if (f.grid.dim == 2) {
      text += ',';
      text += format_number(x[1]);
    }
    text += ',';
    text += format_number(f[k]);
    text += '\n';
  }
  write_atomic(path, text);
  write_atomic(path.string() + ".json", grid_json(f.grid).dump(2) + "\n");
}

/// Reads the values column of a field file back onto grid g.
inline ScalarField read_field(const Grid& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  ScalarField f(g);
  std::string line;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (k >= f.size()) throw IoError("field file has more lines than grid cells");
    const auto pos = line.rfind(',');
    f[k++] = std::stod(line.substr(pos + 1));
  }
  if (k != f.size()) throw IoError("field file has fewer lines than grid cells");
  return f;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  write_atomic(path, j.dump(2) + "\n");
}

inline nlohmann::json row_json(const SweepRow& r) {
  nlohmann::json eta = nlohmann::json::array();
  for (int a = 0; a < r.dim; ++a) eta.push_back(r.eta[a]);
  nlohmann::json j{{"eps", r.eps},         {"c_eps", r.c_eps},         {"eta", eta},
                   {"V_eta", r.V_eta},     {"sup_outside", r.sup_outside}, {"a0", r.a0},
                   {"equivalent", r.equivalent}, {"residual", r.residual}, {"iters", r.iters},
                   {"box_used", r.box_used}, {"converged", r.converged},
                   {"energy_spread", r.energy_spread}};
  j["unpenalized_residual"] = r.unpenalized_residual ? nlohmann::json(*r.unpenalized_residual) : nlohmann::json();
  j["c0_same_grid"] = r.c0_same_grid ? nlohmann::json(*r.c0_same_grid) : nlohmann::json();
  return j;
}

}  // namespace logpen
