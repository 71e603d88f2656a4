#include "finslab/table.hpp"

#include "finslab/types.hpp"

#include <charconv>
#include <cmath>

namespace finslab {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void Table::add_row(std::vector<std::string> row) {
    if (!columns.empty() && row.size() != columns.size())
        throw InputError("table row has " + std::to_string(row.size()) + " cells, expected " +
                         std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

RowBuilder& RowBuilder::operator<<(double x) {
    cells_.push_back(format_double(x));
    return *this;
}

RowBuilder& RowBuilder::operator<<(int x) {
    cells_.push_back(std::to_string(x));
    return *this;
}

RowBuilder& RowBuilder::operator<<(long long x) {
    cells_.push_back(std::to_string(x));
    return *this;
}

RowBuilder& RowBuilder::operator<<(const std::string& s) {
    cells_.push_back(s);
    return *this;
}

}  // namespace finslab
