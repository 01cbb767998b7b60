#pragma once
// Deterministic text output: metric tables, epoch logs, vector exports
// and the run manifest. All CSVs carry a header row.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "urir/errors.hpp"
#include "urir/eval.hpp"
#include "urir/trainer.hpp"

namespace urir {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline std::string metrics_to_csv(const MetricsReport& rep) {
    std::string out = "metric,K,value\n";
    out += "auc,," + fmt_double(rep.auc) + "\n";
    for (const auto& [k, v] : rep.precision) {
        out += "precision," + std::to_string(k) + "," + fmt_double(v) + "\n";
    }
    for (const auto& [k, v] : rep.recall) {
        out += "recall," + std::to_string(k) + "," + fmt_double(v) + "\n";
    }
    for (const auto& [k, v] : rep.mrr) {
        out += "mrr," + std::to_string(k) + "," + fmt_double(v) + "\n";
    }
    return out;
}

inline nlohmann::json metrics_to_json(const MetricsReport& rep, const nlohmann::json& fingerprint) {
    nlohmann::json j;
    j["fingerprint"] = fingerprint;
    j["auc"] = rep.auc;
    j["user_count"] = rep.user_count;
    nlohmann::json p, r, m;
    for (const auto& [k, v] : rep.precision) p[std::to_string(k)] = v;
    for (const auto& [k, v] : rep.recall) r[std::to_string(k)] = v;
    for (const auto& [k, v] : rep.mrr) m[std::to_string(k)] = v;
    j["precision"] = p;
    j["recall"] = r;
    j["mrr"] = m;
    return j;
}

inline std::string epoch_log_to_csv(const std::vector<EpochRow>& log) {
    std::string out = "epoch,train_loss,val_auc\n";
    for (const EpochRow& row : log) {
        out += std::to_string(row.epoch) + "," + fmt_double(row.train_loss) + "," +
               fmt_double(row.val_auc) + "\n";
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
}

inline std::string vector_export_line(int32_t id, const std::vector<double>& vec) {
    std::string line = std::to_string(id) + "\t";
    for (size_t i = 0; i < vec.size(); ++i) {
        if (i > 0) line += ",";
        line += fmt_double(vec[i]);
    }
    return line + "\n";
}

inline std::string ranked_lists_dump(const std::vector<RankedList>& lists) {
    std::string out = "user\tpositive\trank\tranked_candidates\n";
    for (const RankedList& list : lists) {
        out += std::to_string(list.user) + "\t" + std::to_string(list.positive) + "\t" +
               std::to_string(list.rank_of_positive) + "\t";
        for (size_t i = 0; i < list.candidates.size(); ++i) {
            if (i > 0) out += ",";
            out += std::to_string(list.candidates[i]) + ":" + fmt_double(list.scores[i]);
        }
        out += "\n";
    }
    return out;
}

} // namespace urir
