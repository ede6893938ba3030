#include "feddc/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "feddc/errors.hpp"

namespace feddc {

std::string format_double(double value) {
    // Try increasing precision until the value round-trips exactly.
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        double parsed = 0.0;
        const auto* end = buf + std::char_traits<char>::length(buf);
        std::from_chars(buf, end, parsed);
        if (parsed == value) break;
    }
    return buf;
}

std::string metrics_to_csv(const std::vector<MetricsRecord>& records) {
    std::ostringstream out;
    out << kMetricsHeader << '\n';
    for (const auto& r : records) {
        out << r.round << ',' << format_double(r.train_mean) << ','
            << format_double(r.test_mean) << ',' << format_double(r.test_lo)
            << ',' << format_double(r.test_hi) << ',';
        if (r.agg_test) out << format_double(*r.agg_test);
        out << ',' << r.messages << '\n';
    }
    return out.str();
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot open for writing: " + path);
    out << metrics_to_csv(records);
    if (!out) throw IngestionError("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_double_cell(const std::string& cell, const std::string& path,
                         std::size_t line_no) {
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw IngestionError(path + ":" + std::to_string(line_no) +
                             ": bad numeric cell '" + cell + "'");
    return value;
}

std::uint64_t parse_count_cell(const std::string& cell,
                               const std::string& path, std::size_t line_no) {
    std::uint64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw IngestionError(path + ":" + std::to_string(line_no) +
                             ": bad count cell '" + cell + "'");
    return value;
}

} // namespace

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open: " + path);

    std::vector<MetricsRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            std::string header = line;
            if (!header.empty() && header.back() == '\r') header.pop_back();
            if (header != kMetricsHeader)
                throw IngestionError(path + ":1: unexpected header '" +
                                     header + "'");
            continue;
        }
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 7)
            throw IngestionError(path + ":" + std::to_string(line_no) +
                                 ": expected 7 columns, got " +
                                 std::to_string(cells.size()));
        MetricsRecord r;
        r.round = static_cast<std::size_t>(
            parse_count_cell(cells[0], path, line_no));
        r.train_mean = parse_double_cell(cells[1], path, line_no);
        r.test_mean = parse_double_cell(cells[2], path, line_no);
        r.test_lo = parse_double_cell(cells[3], path, line_no);
        r.test_hi = parse_double_cell(cells[4], path, line_no);
        if (!cells[5].empty())
            r.agg_test = parse_double_cell(cells[5], path, line_no);
        r.messages = parse_count_cell(cells[6], path, line_no);
        records.push_back(r);
    }
    return records;
}

} // namespace feddc
