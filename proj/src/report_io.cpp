// Copyright 2026-present the graphann project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "graphann/report_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace graphann {

namespace {

nlohmann::json report_to_json(const ConfigReport& r) {
    return nlohmann::json{
        {"engine", r.engine},
        {"intra", r.cell.intra},
        {"inter", r.cell.inter},
        {"L", r.L},
        {"K", r.K},
        {"width", r.width},
        {"groups", r.groups},
        {"discal", r.discal},
        {"dedicated_balancer", r.dedicated_balancer},
        {"stealing", r.stealing},
        {"inline_fraction", r.inline_fraction},
        {"seed", r.seed},
        {"recall_target", r.recall_target},
        {"target_missed", r.target_missed},
        {"queries", r.metrics.queries},
        {"repetitions", r.metrics.repetitions},
        {"qps", r.metrics.qps},
        {"mean_latency_ms", r.metrics.mean_latency_ms},
        {"p50_latency_ms", r.metrics.p50_latency_ms},
        {"p99_latency_ms", r.metrics.p99_latency_ms},
        {"latency_pass_variance_ms2", r.metrics.latency_pass_variance_ms2},
        {"recall", r.metrics.recall},
        {"rr", r.metrics.mean_rr},
        {"logical_pmb_gbps", r.metrics.logical_pmb_gbps},
        {"logical_emb_gbps", r.metrics.logical_emb_gbps},
        {"breakdown",
         {{"serial", r.metrics.breakdown.serial},
          {"expand", r.metrics.breakdown.expand},
          {"redundant", r.metrics.breakdown.redundant},
          {"sync", r.metrics.breakdown.sync}}},
        {"littles_law_ratio", r.metrics.littles_law_ratio},
        {"mean_expansions", r.metrics.mean_expansions},
        {"mean_redundant_expansions", r.metrics.mean_redundant_expansions},
        {"mean_dist_evals", r.metrics.mean_dist_evals},
        {"mean_bytes_touched", r.metrics.mean_bytes_touched},
        {"short_results", r.metrics.short_results},
    };
}

}  // namespace

std::string reports_to_json(const std::vector<ConfigReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    return arr.dump(2);
}

void write_json_report(const std::string& path, const std::vector<ConfigReport>& reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open report file for writing: " + path);
    out << reports_to_json(reports) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

std::string reports_to_csv(const std::vector<ConfigReport>& reports) {
    std::ostringstream out;
    out << "engine,intra,inter,L,K,width,groups,discal,dedicated_balancer,stealing,"
           "inline_fraction,seed,recall_target,target_missed,queries,repetitions,qps,"
           "mean_latency_ms,p50_latency_ms,p99_latency_ms,latency_pass_variance_ms2,recall,rr,"
           "logical_pmb_gbps,logical_emb_gbps,breakdown_serial,breakdown_expand,"
           "breakdown_redundant,breakdown_sync,littles_law_ratio,mean_expansions,"
           "mean_redundant_expansions,mean_dist_evals,mean_bytes_touched,short_results\n";
    for (const auto& r : reports) {
        out << r.engine << ',' << r.cell.intra << ',' << r.cell.inter << ',' << r.L << ',' << r.K
            << ',' << r.width << ',' << r.groups << ',' << r.discal << ','
            << (r.dedicated_balancer ? 1 : 0) << ',' << (r.stealing ? 1 : 0) << ','
            << r.inline_fraction << ',' << r.seed << ',' << r.recall_target << ','
            << (r.target_missed ? 1 : 0) << ',' << r.metrics.queries << ','
            << r.metrics.repetitions << ',' << r.metrics.qps << ',' << r.metrics.mean_latency_ms
            << ',' << r.metrics.p50_latency_ms << ',' << r.metrics.p99_latency_ms << ','
            << r.metrics.latency_pass_variance_ms2 << ',' << r.metrics.recall << ','
            << r.metrics.mean_rr << ',' << r.metrics.logical_pmb_gbps << ','
            << r.metrics.logical_emb_gbps << ',' << r.metrics.breakdown.serial << ','
            << r.metrics.breakdown.expand << ',' << r.metrics.breakdown.redundant << ','
            << r.metrics.breakdown.sync << ',' << r.metrics.littles_law_ratio << ','
            << r.metrics.mean_expansions << ',' << r.metrics.mean_redundant_expansions << ','
            << r.metrics.mean_dist_evals << ',' << r.metrics.mean_bytes_touched << ','
            << r.metrics.short_results << '\n';
    }
    return out.str();
}

void write_csv_report(const std::string& path, const std::vector<ConfigReport>& reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open report file for writing: " + path);
    out << reports_to_csv(reports);
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace graphann
