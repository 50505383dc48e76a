#include "stochphase/io.hpp"

#include "stochphase/errors.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stochphase {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

template <class Scalar, class Split>
void write_field(const std::string& path, const BasicField<Scalar>& field, Split split) {
  auto out = open_out(path);
  const AnnulusGrid& g = *field.grid;
  out << "i_alpha,i_beta,alpha,beta,x,y,value_re,value_im\n";
  for (int j = 0; j < g.n_beta(); ++j) {
    for (int i = 0; i < g.n_alpha(); ++i) {
      const int n = g.index(i, j);
      const Vec2 x = g.position(n);
      const auto [re, im] = split(field.values[n]);
      out << i << ',' << j << ',' << format_double(g.alpha(i)) << ','
          << format_double(g.beta(j)) << ',' << format_double(x.x()) << ','
          << format_double(x.y()) << ',' << format_double(re) << ','
          << format_double(im) << '\n';
    }
  }
}

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

void write_field_csv(const std::string& path, const ScalarField& field) {
  write_field(path, field, [](double v) { return std::pair{v, 0.0}; });
}

void write_field_csv(const std::string& path, const ComplexField& field) {
  write_field(path, field,
              [](std::complex<double> v) { return std::pair{v.real(), v.imag()}; });
}

std::vector<FieldRow> read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "i_alpha,i_beta,alpha,beta,x,y,value_re,value_im")
    throw std::runtime_error(path + ": unexpected field CSV header '" + line + "'");
  std::vector<FieldRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8)
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    FieldRow r;
    r.i_alpha = std::stoi(cells[0]);
    r.i_beta = std::stoi(cells[1]);
    r.alpha = std::stod(cells[2]);
    r.beta = std::stod(cells[3]);
    r.x = std::stod(cells[4]);
    r.y = std::stod(cells[5]);
    r.value_re = std::stod(cells[6]);
    r.value_im = std::stod(cells[7]);
    rows.push_back(r);
  }
  return rows;
}

void write_trajectory_csv(const std::string& path, const TrajectoryEnsemble& ens) {
  auto out = open_out(path);
  out << "traj_id,t,x,y\n";
  for (int s = 0; s < ens.n_samples; ++s) {
    for (int r = 0; r < ens.n_records; ++r) {
      const Vec2 x = ens.state(s, r);
      out << s << ',' << format_double(ens.times[r]) << ',' << format_double(x.x())
          << ',' << format_double(x.y()) << '\n';
    }
  }
}

void write_quiver_csv(const std::string& path, const CurrentEstimate& current) {
  auto out = open_out(path);
  out << "x,y,jx,jy,count\n";
  for (const auto& c : current.cells) {
    const Vec2 j = c.masked ? Vec2::Zero() : c.current;
    out << format_double(c.center.x()) << ',' << format_double(c.center.y()) << ','
        << format_double(j.x()) << ',' << format_double(j.y()) << ',' << c.count << '\n';
  }
}

void write_isochrons_csv(const std::string& path, const std::vector<Polyline>& lines) {
  auto out = open_out(path);
  out << "level,vertex_index,x,y\n";
  for (const auto& line : lines) {
    for (std::size_t k = 0; k < line.vertices.size(); ++k) {
      out << format_double(line.level) << ',' << k << ','
          << format_double(line.vertices[k].x()) << ','
          << format_double(line.vertices[k].y()) << '\n';
    }
  }
}

void write_prc_csv(const std::string& path, const LimitCycle& cycle,
                   const AdjointSolution& adjoint) {
  auto out = open_out(path);
  out << "t,ux,uy,zx,zy\n";
  for (std::size_t k = 0; k < cycle.times.size(); ++k) {
    out << format_double(cycle.times[k]) << ',' << format_double(cycle.states[k].x())
        << ',' << format_double(cycle.states[k].y()) << ','
        << format_double(adjoint.Z[k].x()) << ',' << format_double(adjoint.Z[k].y())
        << '\n';
  }
}

void write_autocorrelation_csv(const std::string& path, const Autocorrelation& c) {
  auto out = open_out(path);
  out << "lag,re,im\n";
  for (std::size_t k = 0; k < c.lags.size(); ++k) {
    out << format_double(c.lags[k]) << ',' << format_double(c.values[k].real()) << ','
        << format_double(c.values[k].imag()) << '\n';
  }
}

}  // namespace stochphase
