#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubood::env {

/// One row of an episode trace: the state the action was taken in, the
/// action, and the reward and terminal flag it produced.
struct TraceRow {
    long episode = 0;
    int step = 0;
    int config = 0;
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    bool terminal = false;
};

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Columns: episode, step, config, s0..s{width-1}, action, reward, terminal.
std::string trace_header(int state_width);
std::string trace_line(const TraceRow& row);

void write_trace(std::ostream& out, int state_width, const std::vector<TraceRow>& rows);

struct Trace {
    int state_width = 0;
    std::vector<std::string> header;
    std::vector<TraceRow> rows;
};

/// Parses a trace CSV. The state width is inferred from the header.
Trace read_trace(std::istream& in);

} // namespace ubood::env
