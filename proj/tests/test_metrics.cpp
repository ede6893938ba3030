#include <doctest.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "feddc/errors.hpp"
#include "feddc/metrics.hpp"

using namespace feddc;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

std::vector<MetricsRecord> sample_records() {
    std::vector<MetricsRecord> recs(3);
    recs[0] = {0, 0.5, 0.25, 0.125, 0.375, std::nullopt, 0};
    recs[1] = {10, 1.0 / 3.0, 0.1, 0.05, 0.15, 0.875, 480};
    recs[2] = {20, 0.99, 0.98, 0.97, 1.0, 1e-300, 960};
    return recs;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("format_double round-trips awkward values") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 1e300, 0.0, -2.5,
                     0.1 + 0.2, 123456789.123456789}) {
        const std::string s = format_double(v);
        double back = 0.0;
        const auto res =
            std::from_chars(s.data(), s.data() + s.size(), back);
        REQUIRE(res.ec == std::errc());
        CHECK(back == v);
    }
    CHECK(format_double(0.5) == "0.5"); // shortest form, no padding zeros
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("csv serialization round-trips records exactly") {
    const auto recs = sample_records();
    const auto path = temp_file("feddc_metrics_rt.csv");
    write_metrics_csv(path.string(), recs);
    const auto back = read_metrics_csv(path.string());
    CHECK(back == recs);
    std::filesystem::remove(path);
}

TEST_CASE("csv text shape: header plus one line per record") {
    const auto recs = sample_records();
    const std::string text = metrics_to_csv(recs);
    CHECK(text.find(kMetricsHeader) == 0);
    std::size_t newlines = 0;
    for (char c : text)
        if (c == '\n') ++newlines;
    CHECK(newlines == 4); // header + 3 records, trailing newline

    // The missing agg_test serializes as an empty cell.
    const std::size_t line1 = text.find('\n') + 1;
    const std::size_t line1_end = text.find('\n', line1);
    const std::string row = text.substr(line1, line1_end - line1);
    CHECK(row.find(",,") != std::string::npos);
}

TEST_CASE("reader rejects a foreign header") {
    const auto path = temp_file("feddc_metrics_hdr.csv");
    {
        std::ofstream out(path);
        out << "round,acc\n0,0.5\n";
    }
    CHECK_THROWS_AS((void)read_metrics_csv(path.string()), IngestionError);
    std::filesystem::remove(path);
}

TEST_CASE("reader reports malformed cells with their line") {
    const auto path = temp_file("feddc_metrics_bad.csv");
    {
        std::ofstream out(path);
        out << kMetricsHeader << "\n";
        out << "0,0.5,0.5,0.4,0.6,,0\n";
        out << "1,oops,0.5,0.4,0.6,,8\n";
    }
    try {
        (void)read_metrics_csv(path.string());
        FAIL("expected IngestionError");
    } catch (const IngestionError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("reader rejects rows with the wrong column count") {
    const auto path = temp_file("feddc_metrics_cols.csv");
    {
        std::ofstream out(path);
        out << kMetricsHeader << "\n";
        out << "0,0.5,0.5,0.4\n";
    }
    CHECK_THROWS_AS((void)read_metrics_csv(path.string()), IngestionError);
    std::filesystem::remove(path);
}

TEST_CASE("reader tolerates windows line endings") {
    const auto path = temp_file("feddc_metrics_crlf.csv");
    {
        std::ofstream out(path, std::ios::binary);
        out << kMetricsHeader << "\r\n";
        out << "0,0.5,0.25,0.125,0.375,,0\r\n";
    }
    const auto recs = read_metrics_csv(path.string());
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].train_mean == 0.5);
    CHECK_FALSE(recs[0].agg_test.has_value());
    std::filesystem::remove(path);
}

TEST_CASE("missing metrics file raises an ingestion error") {
    CHECK_THROWS_AS(
        (void)read_metrics_csv(temp_file("feddc_no_metrics.csv").string()),
        IngestionError);
}

} // TEST_SUITE
