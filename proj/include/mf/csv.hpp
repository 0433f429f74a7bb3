#pragma once

#include <ostream>
#include <string>

namespace mf {

// Shortest round-trippable decimal form; identical bytes for identical
// doubles, which the determinism contract of the CSV outputs relies on.
std::string csv_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::string& line) { out_ << line << '\n'; }

    template <class... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, put(fields)), ...);
        out_ << '\n';
    }

private:
    void put(double v);
    void put(int v) { out_ << v; }
    void put(long v) { out_ << v; }
    void put(std::size_t v) { out_ << v; }
    void put(const std::string& s) { out_ << s; }
    void put(const char* s) { out_ << s; }
    std::ostream& out_;
};

}  // namespace mf
