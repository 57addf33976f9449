#pragma once

#include "seqbf/config.hpp"
#include "seqbf/simulate.hpp"

#include <string>
#include <vector>

namespace seqbf {

// "6" for k >= 1; "1/10" when the reciprocal is (numerically) an integer.
std::string format_threshold(double k);

// Long-format CSV rows with the fixed column set
// design_id,m,stage,n1,n2,metric,value,err_est. NaN renders as an empty cell.
struct CsvRow {
    std::string design_id;
    int m;
    int stage;
    double n1;
    double n2;
    std::string metric;
    double value;
    double err;
};

std::string to_csv(const std::vector<CsvRow>& rows);

std::vector<CsvRow> report_rows(const std::string& design_id, const SequentialDesign& design,
                                const DesignReport& rep);
std::vector<CsvRow> compare_rows(const std::string& design_id, const SequentialDesign& design,
                                 const DesignReport& analytic, const DesignReport& empirical);

std::string render_human(const RunConfig& cfg, const DesignReport& rep);
std::string render_json(const RunConfig& cfg, const DesignReport& rep);
std::string render_compare_human(const RunConfig& cfg, const DesignReport& analytic,
                                 const DesignReport& empirical, std::uint64_t reps);
std::string render_compare_json(const RunConfig& cfg, const DesignReport& analytic,
                                const DesignReport& empirical, std::uint64_t reps);

}  // namespace seqbf
