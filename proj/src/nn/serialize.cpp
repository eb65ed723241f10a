#include "ubood/nn/serialize.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

namespace ubood::nn {

std::string TokenReader::word() {
    std::string w;
    if (!(in_ >> w)) throw FormatError("unexpected end of snapshot");
    return w;
}

void TokenReader::expect(const std::string& keyword) {
    const std::string w = word();
    if (w != keyword) throw FormatError("expected '" + keyword + "' but found '" + w + "'");
}

long long TokenReader::integer() {
    const std::string w = word();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(w.c_str(), &end, 10);
    if (errno != 0 || end == w.c_str() || *end != '\0') throw FormatError("malformed integer '" + w + "'");
    return v;
}

double TokenReader::real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0' || !std::isfinite(v)) throw FormatError("malformed real '" + w + "'");
    return v;
}

bool TokenReader::at_end() {
    in_ >> std::ws;
    return in_.eof();
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_block(std::ostream& out, const char* tag, std::span<const double> values) {
    out << tag << ' ' << values.size();
    for (double v : values) out << ' ' << format_real(v);
    out << '\n';
}

void read_block(TokenReader& in, const char* tag, std::span<double> values) {
    in.expect(tag);
    const long long n = in.integer();
    if (n != static_cast<long long>(values.size()))
        throw FormatError(std::string(tag) + " block has " + std::to_string(n) + " values, expected " +
                          std::to_string(values.size()));
    for (double& v : values) v = in.real();
}

} // namespace

void write_parameters(std::ostream& out, const ParameterSet& params) {
    out << "layers " << params.layer_count() << '\n';
    for (const auto& s : params.layers())
        out << "layer " << s.input_width << ' ' << s.output_width << ' ' << to_string(s.activation) << ' '
            << to_string(s.kind) << '\n';
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        write_block(out, "weights", params.weights(l));
        write_block(out, "bias", params.bias(l));
        if (params.is_dropout_layer(l)) out << "logit " << format_real(params.dropout_logit(l)) << '\n';
    }
}

ParameterSet read_parameters(TokenReader& in) {
    in.expect("layers");
    const long long n = in.integer();
    if (n < 1 || n > 64) throw FormatError("implausible layer count " + std::to_string(n));
    std::vector<LayerSpec> specs;
    for (long long l = 0; l < n; ++l) {
        in.expect("layer");
        LayerSpec s;
        s.input_width = static_cast<int>(in.integer());
        s.output_width = static_cast<int>(in.integer());
        try {
            s.activation = parse_activation(in.word());
            s.kind = parse_layer_kind(in.word());
        } catch (const std::invalid_argument& e) {
            throw FormatError(e.what());
        }
        specs.push_back(s);
    }
    ParameterSet params = [&] {
        try {
            return ParameterSet(std::move(specs));
        } catch (const DimensionError& e) {
            throw FormatError(e.what());
        }
    }();
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        read_block(in, "weights", params.weights(l));
        read_block(in, "bias", params.bias(l));
        if (params.is_dropout_layer(l)) {
            in.expect("logit");
            params.dropout_logit(l) = in.real();
        }
    }
    return params;
}

} // namespace ubood::nn
