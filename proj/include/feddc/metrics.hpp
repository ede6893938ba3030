#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace feddc {

// One evaluation snapshot of a federated run. agg_test is present only once
// an aggregate model exists (first aggregation round onwards).
struct MetricsRecord {
    std::size_t round = 0;
    double train_mean = 0.0;
    double test_mean = 0.0;
    double test_lo = 0.0;
    double test_hi = 0.0;
    std::optional<double> agg_test;
    std::uint64_t messages = 0;

    bool operator==(const MetricsRecord&) const = default;
};

inline constexpr const char* kMetricsHeader =
    "round,train_mean,test_mean,test_lo,test_hi,agg_test,messages";

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

std::string metrics_to_csv(const std::vector<MetricsRecord>& records);
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records);

// Parses a metrics CSV produced by write_metrics_csv; malformed input
// raises IngestionError with the offending line number.
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

} // namespace feddc
