#include "tp2dp2/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tp2dp2 {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double require_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw DatasetError(where + ": field '" + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

}  // namespace

ordered_json sequence_to_json(const EventSequence& seq) {
    ordered_json j;
    j["id"] = seq.id;
    j["T"] = seq.horizon;
    if (seq.label) {
        j["label"] = *seq.label;
    }
    ordered_json events = ordered_json::array();
    for (const auto& e : seq.events) {
        ordered_json ev;
        ev["t"] = e.time;
        ev["d"] = e.type + 1;
        events.push_back(std::move(ev));
    }
    j["events"] = std::move(events);
    return j;
}

EventSequence sequence_from_json(const json& j) {
    if (!j.is_object()) {
        throw DatasetError("sequence record must be a JSON object");
    }
    EventSequence seq;
    if (!j.contains("id")) {
        throw DatasetError("sequence record lacks 'id'");
    }
    seq.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    const std::string where = "sequence '" + seq.id + "'";
    seq.horizon = require_number(j, "T", where);
    if (j.contains("label") && !j.at("label").is_null()) {
        if (!j.at("label").is_number_integer()) {
            throw DatasetError(where + ": 'label' must be an integer");
        }
        seq.label = j.at("label").get<int>();
    }
    if (!j.contains("events") || !j.at("events").is_array()) {
        throw DatasetError(where + ": 'events' must be an array");
    }
    for (const auto& ev : j.at("events")) {
        if (!ev.is_object()) {
            throw DatasetError(where + ": events must be objects");
        }
        const double t = require_number(ev, "t", where);
        if (!ev.contains("d") || !ev.at("d").is_number_integer()) {
            throw DatasetError(where + ": event field 'd' must be an integer");
        }
        seq.events.push_back({t, ev.at("d").get<int>() - 1});
    }
    return seq;
}

Dataset parse_dataset(std::istream& in, const ordered_json& metadata) {
    Dataset data;
    if (metadata.is_object()) {
        data.metadata = metadata;
    }
    int max_type = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DatasetError("line " + std::to_string(lineno) + ": " + e.what());
        }
        try {
            data.sequences.push_back(sequence_from_json(j));
        } catch (const DatasetError& e) {
            throw DatasetError("line " + std::to_string(lineno) + ": " + e.what());
        }
        for (const auto& e : data.sequences.back().events) {
            max_type = std::max(max_type, e.type + 1);
        }
    }
    int declared = 0;
    if (data.metadata.contains("num_types") && data.metadata.at("num_types").is_number_integer()) {
        declared = data.metadata.at("num_types").get<int>();
    }
    data.num_types = std::max({declared, max_type, 1});
    return data;
}

void write_dataset(std::ostream& out, const Dataset& data) {
    for (const auto& s : data.sequences) {
        out << sequence_to_json(s).dump() << '\n';
    }
}

std::filesystem::path metadata_path(const std::filesystem::path& dataset_path) {
    auto p = dataset_path;
    p.replace_extension(".meta.json");
    return p;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset '" + path.string() + "'");
    }
    ordered_json meta = ordered_json::object();
    const auto mpath = metadata_path(path);
    if (std::filesystem::exists(mpath)) {
        meta = read_json_file(mpath);
    }
    return parse_dataset(in, meta);
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ostringstream body;
    write_dataset(body, data);
    write_text_file(path, body.str());
    ordered_json meta = data.metadata.is_object() ? data.metadata : ordered_json::object();
    meta["num_types"] = data.num_types;
    meta["num_sequences"] = data.size();
    write_json_file(metadata_path(path), meta);
}

ordered_json basis_to_json(const BasisConfig& basis) {
    ordered_json j;
    j["centers"] = basis.centers;
    j["bandwidth"] = basis.bandwidth;
    j["support"] = basis.support;
    return j;
}

BasisConfig basis_from_json(const json& j) {
    BasisConfig b;
    try {
        b.centers = j.at("centers").get<std::vector<double>>();
        b.bandwidth = j.at("bandwidth").get<double>();
        b.support = j.at("support").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed basis: ") + e.what());
    }
    b.validate();
    return b;
}

ordered_json params_to_json(const HawkesParams& params) {
    const int D = params.num_types();
    const int nb = params.basis.size();
    ordered_json a = ordered_json::array();
    for (int d = 0; d < D; ++d) {
        ordered_json row = ordered_json::array();
        for (int s = 0; s < D; ++s) {
            ordered_json cell = ordered_json::array();
            for (int j = 0; j < nb; ++j) {
                cell.push_back(params.coef(d, s, j));
            }
            row.push_back(std::move(cell));
        }
        a.push_back(std::move(row));
    }
    ordered_json j;
    j["mu"] = params.mu;
    j["a"] = std::move(a);
    j["basis"] = basis_to_json(params.basis);
    return j;
}

HawkesParams params_from_json(const json& j) {
    HawkesParams p;
    try {
        p.basis = basis_from_json(j.at("basis"));
        p.mu = j.at("mu").get<std::vector<double>>();
        const auto nested = j.at("a").get<std::vector<std::vector<std::vector<double>>>>();
        const std::size_t D = p.mu.size();
        if (nested.size() != D) {
            throw ConfigError("'a' must have D rows");
        }
        for (const auto& row : nested) {
            if (row.size() != D) {
                throw ConfigError("'a' must be D x D x n_basis");
            }
            for (const auto& cell : row) {
                if (cell.size() != static_cast<std::size_t>(p.basis.size())) {
                    throw ConfigError("'a' must be D x D x n_basis");
                }
                p.a.insert(p.a.end(), cell.begin(), cell.end());
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed Hawkes parameters: ") + e.what());
    }
    p.validate();
    return p;
}

ordered_json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path.string() + "'");
    }
    try {
        return ordered_json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

}  // namespace tp2dp2
