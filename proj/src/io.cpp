#include "cip/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cip {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

// `# key=value key=value ...`
std::map<std::string, std::string> parse_header(const std::string& line) {
  if (line.empty() || line[0] != '#') throw std::runtime_error("missing '#' metadata line");
  std::map<std::string, std::string> out;
  std::stringstream ss(line.substr(1));
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    out[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return out;
}

const std::string& require(const std::map<std::string, std::string>& header, const std::string& key) {
  const auto it = header.find(key);
  if (it == header.end()) throw std::runtime_error("metadata line lacks '" + key + "'");
  return it->second;
}

}  // namespace

void write_field_csv(std::ostream& out, const ScalarField<double>& field) {
  out << "i,j,x,y,value\n" << std::setprecision(17);
  const auto& g = field.grid;
  for (Eigen::Index i = 0; i < g.nodes(); ++i)
    for (Eigen::Index j = 0; j < g.nodes(); ++j)
      out << i << ',' << j << ',' << g.coordinate(i) << ',' << g.coordinate(j) << ',' << field(i, j) << '\n';
}

ScalarField<double> read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("i,j,x,y,value", 0) != 0)
    throw std::runtime_error("read_field_csv: missing header");
  std::vector<std::vector<std::string>> rows;
  Eigen::Index n = 0;
  double R = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line, ',');
    if (row.size() != 5) throw std::runtime_error("read_field_csv: malformed row '" + line + "'");
    n = std::max<Eigen::Index>(n, std::stol(row[0]) + 1);
    R = std::max(R, std::abs(std::stod(row[2])));
    rows.push_back(std::move(row));
  }
  if (Eigen::Index(rows.size()) != n * n) throw std::runtime_error("read_field_csv: incomplete grid");
  ScalarField<double> field(SpaceGrid<double>(R, n));
  for (const auto& row : rows) field(std::stol(row[0]), std::stol(row[1])) = std::stod(row[4]);
  return field;
}

void write_boundary_series_csv(std::ostream& out, const BoundaryTimeSeries<double>& series) {
  out << std::setprecision(17) << "# T=" << series.time.final_time() << " R=" << series.grid.half_width()
      << " nodes=" << series.grid.nodes() << " steps=" << series.time.size() << '\n'
      << "edge,node,x,y,t,F,G\n";
  for (std::size_t k = 0; k < series.nodes.size(); ++k) {
    const auto& b = series.nodes[k];
    for (Eigen::Index l = 0; l < series.time.size(); ++l)
      out << b.edge << ',' << k << ',' << series.grid.coordinate(b.i) << ',' << series.grid.coordinate(b.j) << ','
          << series.time.node(l) << ',' << series.dirichlet(Eigen::Index(k), l) << ','
          << series.neumann(Eigen::Index(k), l) << '\n';
  }
}

void write_fourier_csv(std::ostream& out, const FourierBoundaryData<double>& data) {
  out << std::setprecision(17) << "# delta=" << data.noise_level << " seed=" << data.seed << " N=" << data.order()
      << " T=" << data.final_time << " R=" << data.grid.half_width() << " nodes=" << data.grid.nodes() << '\n'
      << "edge,node,x,y,m,F_m,G_m\n";
  for (std::size_t k = 0; k < data.nodes.size(); ++k) {
    const auto& b = data.nodes[k];
    for (int m = 0; m < data.order(); ++m)
      out << b.edge << ',' << k << ',' << data.grid.coordinate(b.i) << ',' << data.grid.coordinate(b.j) << ','
          << m + 1 << ',' << data.dirichlet(Eigen::Index(k), m) << ',' << data.neumann(Eigen::Index(k), m) << '\n';
  }
}

FourierBoundaryData<double> read_fourier_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_fourier_csv: empty input");
  const auto header = parse_header(line);
  const int order = std::stoi(require(header, "N"));
  const SpaceGrid<double> grid(std::stod(require(header, "R")), std::stol(require(header, "nodes")));
  FourierBoundaryData<double> data{grid, boundary_nodes(grid.nodes()), std::stod(require(header, "T")), {}, {}};
  data.noise_level = std::stod(require(header, "delta"));
  data.seed = std::stoull(require(header, "seed"));
  const auto count = Eigen::Index(data.nodes.size());
  data.dirichlet = Eigen::MatrixXd::Constant(count, order, std::nan(""));
  data.neumann = data.dirichlet;

  if (!std::getline(in, line) || line.rfind("edge,node,x,y,m,F_m,G_m", 0) != 0)
    throw std::runtime_error("read_fourier_csv: missing column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = split(line, ',');
    if (row.size() != 7) throw std::runtime_error("read_fourier_csv: malformed row '" + line + "'");
    const long k = std::stol(row[1]);
    const int m = std::stoi(row[4]);
    if (k < 0 || k >= count || m < 1 || m > order) throw std::runtime_error("read_fourier_csv: index out of range");
    if (std::stoi(row[0]) != data.nodes[std::size_t(k)].edge)
      throw std::runtime_error("read_fourier_csv: node " + row[1] + " is on a different edge");
    data.dirichlet(k, m - 1) = std::stod(row[5]);
    data.neumann(k, m - 1) = std::stod(row[6]);
  }
  if (!data.dirichlet.allFinite() || !data.neumann.allFinite())
    throw std::runtime_error("read_fourier_csv: missing entries");
  return data;
}

void write_coordinate(std::ostream& out, const OperatorBlocks<double>::SpMat& matrix) {
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r)
    for (OperatorBlocks<double>::SpMat::InnerIterator it(matrix, r); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  body(out);
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace cip
