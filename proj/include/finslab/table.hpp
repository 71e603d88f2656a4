#pragma once

#include <string>
#include <vector>

namespace finslab {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

/// Column-ordered rows of already formatted cells.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
};

/// Formats a mixed row: doubles through format_double, the rest verbatim.
class RowBuilder {
public:
    RowBuilder& operator<<(double x);
    RowBuilder& operator<<(int x);
    RowBuilder& operator<<(long long x);
    RowBuilder& operator<<(const std::string& s);
    RowBuilder& operator<<(const char* s) { return *this << std::string(s); }
    RowBuilder& operator<<(bool b) { return *this << std::string(b ? "pass" : "fail"); }
    std::vector<std::string> take() { return std::move(cells_); }

private:
    std::vector<std::string> cells_;
};

}  // namespace finslab
