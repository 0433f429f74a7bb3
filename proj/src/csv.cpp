#include "mf/csv.hpp"

#include <cstdio>

namespace mf {

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvWriter::put(double v) { out_ << csv_double(v); }

}  // namespace mf
