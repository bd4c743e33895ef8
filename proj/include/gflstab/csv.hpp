#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "gflstab/integrate.hpp"
#include "gflstab/roa.hpp"

namespace gflstab {

inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal form that strtod maps back to the identical double.
std::string format_double(double v);

struct CsvParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One row per accepted step:
/// t,delta,x_int_pll,i_d,dv2,i_q,p,v_td,v_tq,events
/// The events cell carries semicolon-joined labels for events applied at that
/// time and is empty on all other rows.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct TrajectoryTable {
    std::vector<double> t;
    std::vector<StateVec> states;
    std::vector<double> p, v_td, v_tq;
    std::vector<std::string> events;
    std::size_t size() const { return t.size(); }
};

TrajectoryTable read_trajectory_csv(std::istream& is);

/// Boundary rows: plane,branch,seq,c0,c1 with branch in {a, b, uep};
/// validity lines follow as branch=validity:<label> rows carrying the pinned
/// axis in c0/c1 (the free coordinate is nan).
void write_boundary_csv(std::ostream& os, const RoaBoundary& b,
                        const std::vector<ValidityLine>& lines = {},
                        const std::string& plane = "slow");

/// Grid rows: i0,i1,c0,c1,outcome.
void write_grid_csv(std::ostream& os, const RoaGrid& grid);

}  // namespace gflstab
