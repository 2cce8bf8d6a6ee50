#include "tdev/alerting.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tdev/csv.hpp"

namespace tdev {

using nlohmann::json;

void VotingConfig::validate() const {
    if (min_votes == 0) throw std::invalid_argument("min_votes must be >= 1");
    if (k < min_votes) {
        throw std::invalid_argument("voting set size k (" + std::to_string(k) +
                                    ") must be >= min_votes (" + std::to_string(min_votes) + ")");
    }
    if (T_anom < 0.0 || T_anom > 1.0) {
        throw std::invalid_argument("T_anom must lie in [0, 1]");
    }
}

std::vector<Alert> extract_alerts(const DeviationSeries& scores, double threshold,
                                  Duration merge_gap) {
    std::vector<Alert> alerts;
    const auto& entries = scores.entries;
    std::size_t i = 0;
    while (i < entries.size()) {
        if (!(entries[i].score >= threshold)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < entries.size() && entries[j + 1].score >= threshold) ++j;

        Alert alert;
        alert.start = entries[i].timestamp;
        alert.end = entries[j].timestamp;
        alert.peak_score = entries[i].score;
        alert.representative_window = i;
        for (std::size_t m = i; m <= j; ++m) {
            alert.member_windows.push_back(m);
            if (entries[m].score > alert.peak_score) {
                alert.peak_score = entries[m].score;
                alert.representative_window = m;
            }
        }

        if (!alerts.empty() && alert.start - alerts.back().end < merge_gap) {
            Alert& prev = alerts.back();
            prev.end = alert.end;
            prev.member_windows.insert(prev.member_windows.end(), alert.member_windows.begin(),
                                       alert.member_windows.end());
            if (alert.peak_score > prev.peak_score) {
                prev.peak_score = alert.peak_score;
                prev.representative_window = alert.representative_window;
            }
        } else {
            alerts.push_back(std::move(alert));
        }
        i = j + 1;
    }
    for (std::size_t a = 0; a < alerts.size(); ++a) {
        alerts[a].id = static_cast<std::int64_t>(a);
    }
    return alerts;
}

VoteOutcome vote_label(const Alert& new_alert, const std::vector<Alert>& registry,
                       const std::vector<Window>& windows, const DistanceSpec& dist,
                       const VotingConfig& config) {
    config.validate();

    struct Candidate {
        std::int64_t id;
        double distance;
        AlertLabel label;
    };
    std::vector<Candidate> candidates;
    for (const Alert& past : registry) {
        if (!past.label) {
            throw std::invalid_argument("registry alert " + std::to_string(past.id) +
                                        " is unlabeled; labels are required before voting");
        }
        if (past.start > new_alert.start) {
            throw std::invalid_argument("registry alert " + std::to_string(past.id) +
                                        " does not precede the alert being labeled");
        }
        const double d = window_distance(windows[new_alert.representative_window],
                                         windows[past.representative_window], dist);
        if (d <= config.t_cutoff) candidates.push_back({past.id, d, *past.label});
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    if (candidates.size() > config.k) candidates.resize(config.k);

    VoteOutcome outcome;
    if (candidates.size() < config.min_votes) {
        // Not enough similar history: err on the side of caution.
        outcome.label = AlertLabel::true_positive;
        outcome.source = LabelSource::default_positive;
        for (const auto& c : candidates) outcome.votes.push_back({c.id, c.distance, c.label, 0.0});
        return outcome;
    }

    const double floor = dist.identity_floor();
    constexpr double kEpsilon = 1e-6;
    double weight_sum = 0.0, vote_sum = 0.0;
    for (const auto& c : candidates) {
        double w = 1.0;
        if (config.weighting == VotingConfig::Weighting::similarity_weighted) {
            w = 1.0 / (kEpsilon + (c.distance - floor));
        }
        outcome.votes.push_back({c.id, c.distance, c.label, w});
        weight_sum += w;
        vote_sum += w * (c.label == AlertLabel::true_positive ? 1.0 : 0.0);
    }
    const double mean = vote_sum / weight_sum;
    outcome.label = mean >= config.T_anom ? AlertLabel::true_positive : AlertLabel::false_positive;
    outcome.source = LabelSource::propagated;
    return outcome;
}

std::vector<Alert> bootstrap_labels(const std::vector<Alert>& seed,
                                    const std::vector<Alert>& unlabeled,
                                    const std::vector<Window>& windows, const DistanceSpec& dist,
                                    const VotingConfig& config) {
    for (const Alert& a : seed) {
        if (!a.label) {
            throw std::invalid_argument("seed alert " + std::to_string(a.id) + " is unlabeled");
        }
    }
    for (std::size_t i = 1; i < unlabeled.size(); ++i) {
        if (unlabeled[i].start < unlabeled[i - 1].start) {
            throw std::invalid_argument("alerts must be labeled in time order; alert " +
                                        std::to_string(unlabeled[i].id) + " is out of order");
        }
    }
    {
        std::vector<std::int64_t> ids;
        for (const Alert& a : seed) ids.push_back(a.id);
        for (const Alert& a : unlabeled) ids.push_back(a.id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
            throw std::invalid_argument("alert ids must be unique across seed and unlabeled lists");
        }
    }

    // Every vote sees exactly the labeled alerts that precede the alert
    // being labeled, whether they came from the seed or from propagation.
    std::vector<Alert> registry = seed;
    std::vector<Alert> labeled;
    labeled.reserve(unlabeled.size());
    for (const Alert& alert : unlabeled) {
        std::vector<Alert> visible;
        for (const Alert& past : registry) {
            if (past.start <= alert.start) visible.push_back(past);
        }
        VoteOutcome outcome = vote_label(alert, visible, windows, dist, config);
        Alert out = alert;
        out.label = outcome.label;
        out.label_source = outcome.source;
        out.vote_record = outcome.votes;
        labeled.push_back(out);
        registry.push_back(out);
    }
    return labeled;
}

FilterResult filter_alerts(const std::vector<Alert>& labeled) {
    FilterResult result;
    for (const Alert& a : labeled) {
        if (!a.label) {
            throw std::invalid_argument("alert " + std::to_string(a.id) +
                                        " is unlabeled; label all alerts before filtering");
        }
        if (*a.label == AlertLabel::false_positive) {
            result.suppressed.push_back(a);
        } else {
            result.emitted.push_back(a);
        }
    }
    return result;
}

std::string label_name(AlertLabel label) {
    return label == AlertLabel::true_positive ? "true_positive" : "false_positive";
}

std::string label_source_name(LabelSource source) {
    switch (source) {
        case LabelSource::human: return "human";
        case LabelSource::propagated: return "propagated";
        case LabelSource::default_positive: return "default_positive";
    }
    return "?";
}

namespace {

AlertLabel parse_label(const std::string& name) {
    if (name == "true_positive" || name == "1") return AlertLabel::true_positive;
    if (name == "false_positive" || name == "0") return AlertLabel::false_positive;
    throw std::invalid_argument("unknown alert label '" + name + "'");
}

LabelSource parse_label_source(const std::string& name) {
    if (name == "human") return LabelSource::human;
    if (name == "propagated") return LabelSource::propagated;
    if (name == "default_positive") return LabelSource::default_positive;
    throw std::invalid_argument("unknown label source '" + name + "'");
}

}  // namespace

void write_registry_jsonl(const std::string& path, const std::vector<Alert>& alerts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const Alert& a : alerts) {
        json j;
        j["id"] = a.id;
        j["start"] = format_timestamp(a.start);
        j["end"] = format_timestamp(a.end);
        j["peak_score"] = format_double(a.peak_score);
        j["member_windows"] = a.member_windows;
        j["representative_window"] = a.representative_window;
        if (a.label) {
            j["label"] = label_name(*a.label);
            j["label_source"] = label_source_name(*a.label_source);
        }
        if (!a.vote_record.empty()) {
            json votes = json::array();
            for (const auto& v : a.vote_record) {
                votes.push_back({{"alert_id", v.alert_id},
                                 {"distance", format_double(v.distance)},
                                 {"label", label_name(v.label)},
                                 {"weight", format_double(v.weight)}});
            }
            j["vote_record"] = votes;
        }
        out << j.dump() << '\n';
    }
}

std::vector<Alert> read_registry_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<Alert> alerts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& err) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(lineno) + ": " +
                                     err.what());
        }
        Alert a;
        a.id = j.at("id").get<std::int64_t>();
        a.start = parse_timestamp(j.at("start").get<std::string>());
        a.end = parse_timestamp(j.at("end").get<std::string>());
        a.peak_score = std::strtod(j.at("peak_score").get<std::string>().c_str(), nullptr);
        a.member_windows = j.at("member_windows").get<std::vector<std::size_t>>();
        a.representative_window = j.at("representative_window").get<std::size_t>();
        if (j.contains("label")) {
            a.label = parse_label(j.at("label").get<std::string>());
            a.label_source = parse_label_source(j.at("label_source").get<std::string>());
        }
        if (j.contains("vote_record")) {
            for (const auto& v : j.at("vote_record")) {
                VoteRecord rec;
                rec.alert_id = v.at("alert_id").get<std::int64_t>();
                rec.distance = std::strtod(v.at("distance").get<std::string>().c_str(), nullptr);
                rec.label = parse_label(v.at("label").get<std::string>());
                rec.weight = std::strtod(v.at("weight").get<std::string>().c_str(), nullptr);
                a.vote_record.push_back(rec);
            }
        }
        alerts.push_back(std::move(a));
    }
    return alerts;
}

void apply_seed_labels_csv(const std::string& path, std::vector<Alert>& alerts, bool strict) {
    CsvTable table = read_csv(path);
    const std::size_t key_col = table.column("alert");
    const std::size_t label_col = table.column("label");

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& key = table.rows[r][key_col];
        const AlertLabel label = parse_label(table.rows[r][label_col]);

        bool matched = false;
        const auto slash = key.find('/');
        if (slash == std::string::npos) {
            char* end = nullptr;
            const std::int64_t id = std::strtoll(key.c_str(), &end, 10);
            if (end != key.c_str() + key.size()) {
                throw std::invalid_argument("row " + std::to_string(r + 2) + " of '" + path +
                                            "': alert key '" + key +
                                            "' is neither an id nor an interval");
            }
            for (Alert& a : alerts) {
                if (a.id == id) {
                    a.label = label;
                    a.label_source = LabelSource::human;
                    matched = true;
                }
            }
        } else {
            const TimePoint s = parse_timestamp(key.substr(0, slash));
            const TimePoint e = parse_timestamp(key.substr(slash + 1));
            for (Alert& a : alerts) {
                if (intervals_overlap(a.start, a.end, s, e)) {
                    a.label = label;
                    a.label_source = LabelSource::human;
                    matched = true;
                }
            }
        }
        if (!matched && strict) {
            throw std::invalid_argument("row " + std::to_string(r + 2) + " of '" + path +
                                        "': no alert matches '" + key + "'");
        }
    }
}

}  // namespace tdev
