#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "ubood/nn/network.hpp"

namespace ubood::nn {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Whitespace-tokenized reader for the snapshot text format. Every accessor
/// throws FormatError on truncation or a malformed token.
class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string word();
    void expect(const std::string& keyword);
    long long integer();
    double real();
    bool at_end();

private:
    std::istream& in_;
};

/// Decimal with 17 significant digits; parses back to the identical double.
std::string format_real(double v);

void write_parameters(std::ostream& out, const ParameterSet& params);
ParameterSet read_parameters(TokenReader& in);

} // namespace ubood::nn
