#include "gflstab/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>

namespace gflstab {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& cell, std::size_t line_no) {
    const char* s = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw CsvParseError("line " + std::to_string(line_no) +
                            ": not a number: '" + cell + "'");
    return v;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,delta,x_int_pll,i_d,dv2,i_q,p,v_td,v_tq,events\n";
    std::size_t next_event = 0;
    const bool have_aux = traj.aux_p.size() == traj.size();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.t[i];
        os << format_double(t);
        for (int c = 0; c < 5; ++c) os << ',' << format_double(traj.states[i][c]);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        os << ',' << format_double(have_aux ? traj.aux_p[i] : nan);
        os << ',' << format_double(have_aux ? traj.aux_vtd[i] : nan);
        os << ',' << format_double(have_aux ? traj.aux_vtq[i] : nan);
        os << ',';
        // Events land on the first row at or after their time; the integrator
        // places a row exactly at each event barrier.
        bool first = true;
        while (next_event < traj.events.size() &&
               traj.events[next_event].first <=
                   t + 1e-12 * std::max(1.0, std::abs(t))) {
            if (!first) os << ';';
            os << traj.events[next_event].second;
            first = false;
            ++next_event;
        }
        os << '\n';
    }
}

TrajectoryTable read_trajectory_csv(std::istream& is) {
    TrajectoryTable tbl;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) throw CsvParseError("empty input");
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "t,delta,x_int_pll,i_d,dv2,i_q,p,v_td,v_tq,events")
        throw CsvParseError("line 1: unexpected header: '" + line + "'");
    while (std::getline(is, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != 10)
            throw CsvParseError("line " + std::to_string(line_no) + ": expected 10 "
                                "cells, got " + std::to_string(cells.size()));
        tbl.t.push_back(parse_double(cells[0], line_no));
        StateVec s{};
        for (int c = 0; c < 5; ++c) s[c] = parse_double(cells[1 + c], line_no);
        tbl.states.push_back(s);
        tbl.p.push_back(parse_double(cells[6], line_no));
        tbl.v_td.push_back(parse_double(cells[7], line_no));
        tbl.v_tq.push_back(parse_double(cells[8], line_no));
        tbl.events.push_back(cells[9]);
    }
    return tbl;
}

void write_boundary_csv(std::ostream& os, const RoaBoundary& b,
                        const std::vector<ValidityLine>& lines,
                        const std::string& plane) {
    os << "plane,branch,seq,c0,c1\n";
    auto row = [&](const char* branch, std::size_t seq, double c0, double c1) {
        os << plane << ',' << branch << ',' << seq << ',' << format_double(c0)
           << ',' << format_double(c1) << '\n';
    };
    row("uep", 0, b.uep.c0, b.uep.c1);
    for (std::size_t i = 0; i < b.branch_a.size(); ++i)
        row("a", i, b.branch_a[i].c0, b.branch_a[i].c1);
    for (std::size_t i = 0; i < b.branch_b.size(); ++i)
        row("b", i, b.branch_b[i].c0, b.branch_b[i].c1);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const ValidityLine& l : lines) {
        const std::string tag = "validity:" + l.label;
        if (l.axis == 0)
            row(tag.c_str(), 0, l.value, nan);
        else
            row(tag.c_str(), 0, nan, l.value);
    }
}

void write_grid_csv(std::ostream& os, const RoaGrid& grid) {
    os << "i0,i1,c0,c1,outcome\n";
    for (int i1 = 0; i1 < grid.spec.n1; ++i1) {
        for (int i0 = 0; i0 < grid.spec.n0; ++i0) {
            const ReducedState c = grid.center(i0, i1);
            os << i0 << ',' << i1 << ',' << format_double(c.c0) << ','
               << format_double(c.c1) << ',' << cell_outcome_name(grid.at(i0, i1))
               << '\n';
        }
    }
}

}  // namespace gflstab
