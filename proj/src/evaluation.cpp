#include "synthscan/evaluation.hpp"

#include <fstream>

#include <json.hpp>

#include "synthscan/errors.hpp"

namespace synthscan {

EvaluationReport report_from_predictions(LabelScheme scheme, int n_classes,
                                         const std::vector<int>& truth,
                                         const std::vector<int>& predicted,
                                         const std::string& dataset_tag,
                                         const std::string& model_digest) {
    if (truth.size() != predicted.size())
        raise_internal("ShapeMismatch", "truth/prediction count mismatch");
    EvaluationReport r;
    r.scheme = scheme;
    r.n_classes = n_classes;
    r.n_total = truth.size();
    r.dataset_tag = dataset_tag;
    r.model_digest = model_digest;
    r.confusion.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes)
            raise_data("LabelOutOfRange", "label outside scheme at sample " + std::to_string(i));
        ++r.confusion[static_cast<std::size_t>(truth[i]) * n_classes + predicted[i]];
        if (truth[i] == predicted[i]) ++correct;
    }
    r.accuracy = r.n_total == 0 ? 0.0
                                : static_cast<double>(correct) / static_cast<double>(r.n_total);
    return r;
}

std::string report_to_json(const EvaluationReport& report) {
    nlohmann::json j;
    j["accuracy"] = report.accuracy;
    j["n_classes"] = report.n_classes;
    j["n_total"] = report.n_total;
    j["confusion"] = report.confusion;
    j["label_scheme"] = scheme_name(report.scheme);
    j["dataset_tag"] = report.dataset_tag;
    j["model_digest"] = report.model_digest;
    return j.dump(2);
}

void save_report(const EvaluationReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& tsv_path) {
    {
        std::ofstream out(json_path);
        if (!out) raise_data("UnwritablePath", "cannot write " + json_path.string());
        out << report_to_json(report) << "\n";
    }
    std::ofstream out(tsv_path);
    if (!out) raise_data("UnwritablePath", "cannot write " + tsv_path.string());
    out << "true\\pred";
    for (int c = 0; c < report.n_classes; ++c) out << "\t" << c;
    out << "\n";
    for (int t = 0; t < report.n_classes; ++t) {
        out << t;
        for (int c = 0; c < report.n_classes; ++c) out << "\t" << report.cell(t, c);
        out << "\n";
    }
}

}  // namespace synthscan
