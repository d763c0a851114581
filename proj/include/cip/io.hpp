#pragma once

#include "cip/elliptic_system.hpp"
#include "cip/forward_sim.hpp"
#include "cip/fourier_data.hpp"
#include "cip/grid.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>

namespace cip {

/// `i,j,x,y,value`, i-major, 0-based indices.
void write_field_csv(std::ostream& out, const ScalarField<double>& field);
ScalarField<double> read_field_csv(std::istream& in);

/// `# T= R= nodes= steps=` then `edge,node,x,y,t,F,G`.
void write_boundary_series_csv(std::ostream& out, const BoundaryTimeSeries<double>& series);

/// `# delta= seed= N= T= R= nodes=` then `edge,node,x,y,m,F_m,G_m` with
/// m = 1..N.
void write_fourier_csv(std::ostream& out, const FourierBoundaryData<double>& data);
FourierBoundaryData<double> read_fourier_csv(std::istream& in);

/// One `row col value` line per stored entry, 0-based.
void write_coordinate(std::ostream& out, const OperatorBlocks<double>::SpMat& matrix);

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

}  // namespace cip
