#pragma once

// Text output: CSV tables, legacy VTK, MatrixMarket and mesh dumps.
// Doubles are written in shortest round-trip form.

#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "eulerfem/analysis.hpp"
#include "eulerfem/assembly.hpp"
#include "eulerfem/fespace.hpp"
#include "eulerfem/mesh.hpp"
#include "eulerfem/stepper.hpp"

namespace eulerfem {

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Plain comma-separated reader (no quoting); every row must match the header width.
inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw std::invalid_argument("ragged CSV row: " + line);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_ledger_csv_row(std::ostream& os, const EnergyLedgerRow& r) {
  os << r.step << ',' << format_double(r.t) << ',' << format_double(r.kinetic) << ','
     << format_double(r.diff_dissip) << ',' << format_double(r.jump_dissip) << ',' << format_double(r.work) << ','
     << format_double(r.balance_residual) << '\n';
}

inline void write_ledger_csv(std::ostream& os, const EnergyLedger& ledger) {
  os << "step,t,kinetic,diff_dissip,jump_dissip,work,balance_residual\n";
  for (const auto& r : ledger) write_ledger_csv_row(os, r);
}

struct ConvergenceRow {
  int k = 0;
  std::string mu_mode;
  ConvergenceRecord record;
};

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "k,mu_mode,n,h,err_u,order_u,err_p,order_p,jump_seminorm,sup_RE\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& row : rows) {
    const ConvergenceRecord& r = row.record;
    os << row.k << ',' << row.mu_mode << ',' << r.n << ',' << format_double(r.h) << ',' << format_double(r.err_u_L2)
       << ',' << opt(r.eoc_u) << ',' << format_double(r.err_p_L2) << ',' << opt(r.eoc_p) << ','
       << format_double(r.jump_seminorm) << ',' << format_double(r.sup_relative_energy) << '\n';
  }
}

/// Human-readable table with one block per mu mode.
inline void write_convergence_markdown(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  auto sci = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return std::string(buf);
  };
  auto fix = [](const std::optional<double>& v) {
    if (!v) return std::string("--");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return std::string(buf);
  };
  std::string mode;
  for (const auto& row : rows) {
    if (row.mu_mode != mode) {
      mode = row.mu_mode;
      os << "\n### k = " << row.k << ", mu_h = " << mode << "\n\n";
      os << "| h | n | L2 error u | order | L2 error p | order | jump seminorm | sup R_E |\n";
      os << "|---|---|---|---|---|---|---|---|\n";
    }
    const ConvergenceRecord& r = row.record;
    char h[32];
    std::snprintf(h, sizeof h, "%.4f", r.h);
    os << "| " << h << " | " << r.n << " | " << sci(r.err_u_L2) << " | " << fix(r.eoc_u) << " | "
       << sci(r.err_p_L2) << " | " << fix(r.eoc_p) << " | " << sci(r.jump_seminorm) << " | "
       << sci(r.sup_relative_energy) << " |\n";
  }
}

/// cell_id,xc,yc,u1,u2,p with velocity sampled at the centroid.
inline void write_field_csv(std::ostream& os, const State& s) {
  const Mesh& mesh = *s.u.mesh;
  os << "cell_id,xc,yc,u1,u2,p\n";
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const Vec2 xc = mesh.geometry(c).centroid;
    const Vec2 u = cell_affine(s.u, c)(xc);
    os << c << ',' << format_double(xc.x()) << ',' << format_double(xc.y()) << ',' << format_double(u.x()) << ','
       << format_double(u.y()) << ',' << format_double(s.p.dofs[c]) << '\n';
  }
}

/// Legacy ASCII unstructured grid. Each triangle gets its own three points so
/// that cells crossing a periodic seam are drawn unwrapped.
inline void write_vtk(std::ostream& os, const State& s, const std::string& title = "eulerfem") {
  const Mesh& mesh = *s.u.mesh;
  const Index nc = mesh.num_cells();
  os << "# vtk DataFile Version 3.0\n" << title << " t=" << format_double(s.t) << "\nASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\nPOINTS " << 3 * nc << " double\n";
  for (Index c = 0; c < nc; ++c)
    for (const Vec2& p : mesh.cell_points(c)) os << format_double(p.x()) << ' ' << format_double(p.y()) << " 0\n";
  os << "CELLS " << nc << ' ' << 4 * nc << '\n';
  for (Index c = 0; c < nc; ++c) os << "3 " << 3 * c << ' ' << 3 * c + 1 << ' ' << 3 * c + 2 << '\n';
  os << "CELL_TYPES " << nc << '\n';
  for (Index c = 0; c < nc; ++c) os << "5\n";
  const PressureField w = vorticity(s);
  os << "CELL_DATA " << nc << "\nVECTORS velocity double\n";
  for (Index c = 0; c < nc; ++c) {
    const Vec2 u = cell_affine(s.u, c)(mesh.geometry(c).centroid);
    os << format_double(u.x()) << ' ' << format_double(u.y()) << " 0\n";
  }
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (Index c = 0; c < nc; ++c) os << format_double(s.p.dofs[c]) << '\n';
  os << "SCALARS vorticity double 1\nLOOKUP_TABLE default\n";
  for (Index c = 0; c < nc; ++c) os << format_double(w.dofs[c]) << '\n';
}

inline void write_matrix_market(std::ostream& os, const SparseOperator& op) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << op.rows() << ' ' << op.cols() << ' ' << op.matrix.nonZeros() << '\n';
  for (Index r = 0; r < op.matrix.outerSize(); ++r)
    for (SparseOperator::Matrix::InnerIterator it(op.matrix, r); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
}

inline void write_mesh_csv(std::ostream& os, const Mesh& mesh) {
  os << "#vertices x,y\n";
  for (const Vec2& v : mesh.vertices()) os << format_double(v.x()) << ',' << format_double(v.y()) << '\n';
  os << "#cells v0,v1,v2\n";
  for (const auto& c : mesh.cells()) os << c[0] << ',' << c[1] << ',' << c[2] << '\n';
  os << "#faces v0,v1,owner,neighbor,nx,ny,len\n";
  for (const Face& f : mesh.faces())
    os << f.vertices[0] << ',' << f.vertices[1] << ',' << f.owner << ',' << f.neighbor << ','
       << format_double(f.normal.x()) << ',' << format_double(f.normal.y()) << ',' << format_double(f.length) << '\n';
}

}  // namespace eulerfem
