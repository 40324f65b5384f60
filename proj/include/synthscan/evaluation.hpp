#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "synthscan/dataset.hpp"

namespace synthscan {

struct EvaluationReport {
    double accuracy = 0.0;
    int n_classes = 0;
    std::vector<std::size_t> confusion;  // [true * n_classes + predicted]
    std::size_t n_total = 0;
    LabelScheme scheme = LabelScheme::detection;
    std::string dataset_tag;
    std::string model_digest;

    std::size_t cell(int truth, int predicted) const {
        return confusion[static_cast<std::size_t>(truth) * n_classes + predicted];
    }
};

// accuracy = trace / n_total by construction.
EvaluationReport report_from_predictions(LabelScheme scheme, int n_classes,
                                         const std::vector<int>& truth,
                                         const std::vector<int>& predicted,
                                         const std::string& dataset_tag,
                                         const std::string& model_digest);

std::string report_to_json(const EvaluationReport& report);
void save_report(const EvaluationReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& tsv_path);

}  // namespace synthscan
