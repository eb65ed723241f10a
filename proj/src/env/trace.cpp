#include "ubood/env/trace.hpp"

#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "ubood/nn/serialize.hpp"

namespace ubood::env {

std::string trace_header(int state_width) {
    std::string h = "episode,step,config";
    for (int i = 0; i < state_width; ++i) h += ",s" + std::to_string(i);
    h += ",action,reward,terminal";
    return h;
}

std::string trace_line(const TraceRow& row) {
    std::string line = std::to_string(row.episode) + ',' + std::to_string(row.step) + ',' + std::to_string(row.config);
    for (double v : row.state) line += ',' + nn::format_real(v);
    line += ',' + std::to_string(row.action) + ',' + nn::format_real(row.reward) + ',' + (row.terminal ? "1" : "0");
    return line;
}

void write_trace(std::ostream& out, int state_width, const std::vector<TraceRow>& rows) {
    out << trace_header(state_width) << '\n';
    for (const auto& r : rows) out << trace_line(r) << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double to_real(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw TraceError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

long to_long(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') throw TraceError("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    return v;
}

} // namespace

Trace read_trace(std::istream& in) {
    Trace t;
    std::string line;
    if (!std::getline(in, line)) throw TraceError("trace is empty (missing header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_csv(line);
    const int fixed = 6;
    if (static_cast<int>(t.header.size()) < fixed + 1 || t.header[0] != "episode" || t.header[1] != "step" ||
        t.header[2] != "config")
        throw TraceError("trace header must start with episode,step,config and end with action,reward,terminal");
    t.state_width = static_cast<int>(t.header.size()) - fixed;
    if (trace_header(t.state_width) != line) throw TraceError("unexpected trace header: " + line);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != t.header.size())
            throw TraceError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                             " columns, found " + std::to_string(cells.size()));
        TraceRow r;
        r.episode = to_long(cells[0], line_no);
        r.step = static_cast<int>(to_long(cells[1], line_no));
        r.config = static_cast<int>(to_long(cells[2], line_no));
        r.state.reserve(static_cast<std::size_t>(t.state_width));
        for (int i = 0; i < t.state_width; ++i) r.state.push_back(to_real(cells[3 + i], line_no));
        r.action = static_cast<int>(to_long(cells[3 + t.state_width], line_no));
        r.reward = to_real(cells[4 + t.state_width], line_no);
        r.terminal = to_long(cells[5 + t.state_width], line_no) != 0;
        t.rows.push_back(std::move(r));
    }
    return t;
}

} // namespace ubood::env
