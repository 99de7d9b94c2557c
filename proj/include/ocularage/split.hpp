#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ocularage/errors.hpp"
#include "ocularage/manifest.hpp"
#include "ocularage/rng.hpp"

namespace ocularage {

enum class SplitKind { Train, Val, Test };

inline const char* to_string(SplitKind s) {
    switch (s) {
        case SplitKind::Train: return "train";
        case SplitKind::Val: return "val";
        default: return "test";
    }
}

struct SplitAssignment {
    std::set<std::string> train;
    std::set<std::string> val;
    std::set<std::string> test;

    const std::set<std::string>& of(SplitKind k) const {
        switch (k) {
            case SplitKind::Train: return train;
            case SplitKind::Val: return val;
            default: return test;
        }
    }

    SplitKind lookup(const std::string& subject) const {
        if (train.count(subject)) return SplitKind::Train;
        if (val.count(subject)) return SplitKind::Val;
        if (test.count(subject)) return SplitKind::Test;
        throw DataError("subject not assigned to any split: " + subject);
    }
};

namespace detail {

struct SubjectInfo {
    std::string id;
    int images = 0;
    bool has_young = false;
    bool has_old = false;
};

} // namespace detail

/// Subject-exclusive 3-way split. Subjects are shuffled with the seed, then
/// greedily assigned to whichever split is furthest below its target image
/// fraction. Deterministic fix-up passes follow: subject moves and pairwise
/// swaps that strictly shrink the worst fraction deviation, then minimal
/// moves to give every split both age groups where the manifest permits.
inline SplitAssignment subject_exclusive_split(const std::vector<SampleRecord>& manifest,
                                               std::array<double, 3> ratios = {0.8, 0.1, 0.1},
                                               uint64_t seed = 42) {
    if (manifest.empty()) throw DataError("subject_exclusive_split: empty manifest");

    std::map<std::string, detail::SubjectInfo> by_subject;
    for (const auto& r : manifest) {
        auto& info = by_subject[r.subject_id];
        info.id = r.subject_id;
        info.images += 1;
        if (assign_age_group(r.age) == AgeGroup::Young) info.has_young = true;
        else info.has_old = true;
    }
    if (by_subject.size() < 3)
        throw InsufficientSubjects("need at least 3 subjects, got " + std::to_string(by_subject.size()));

    std::vector<detail::SubjectInfo> subjects;
    subjects.reserve(by_subject.size());
    for (auto& [_, info] : by_subject) subjects.push_back(info);

    Rng rng(mix_seed(seed, 0x5911u));
    rng.shuffle(subjects.begin(), subjects.end());

    const double total = static_cast<double>(manifest.size());
    std::array<std::vector<int>, 3> members; // indices into subjects
    std::array<double, 3> assigned = {0.0, 0.0, 0.0};

    auto deficit = [&](int k) { return ratios[k] - assigned[k] / total; };

    for (size_t i = 0; i < subjects.size(); ++i) {
        int best = 0;
        for (int k = 1; k < 3; ++k)
            if (deficit(k) > deficit(best)) best = k; // ties keep train > val > test order
        members[best].push_back(static_cast<int>(i));
        assigned[best] += subjects[i].images;
    }

    // Every split must own at least one subject.
    for (int k = 0; k < 3; ++k) {
        if (!members[k].empty()) continue;
        int donor = 0;
        for (int j = 1; j < 3; ++j)
            if (members[j].size() > members[donor].size()) donor = j;
        // smallest subject of the biggest split
        int pick = 0;
        for (size_t m = 1; m < members[donor].size(); ++m)
            if (subjects[members[donor][m]].images < subjects[members[donor][pick]].images) pick = static_cast<int>(m);
        const int idx = members[donor][pick];
        members[donor].erase(members[donor].begin() + pick);
        members[k].push_back(idx);
        assigned[donor] -= subjects[idx].images;
        assigned[k] += subjects[idx].images;
    }

    auto worst_dev = [&]() {
        double w = 0.0;
        for (int k = 0; k < 3; ++k) w = std::max(w, std::abs(assigned[k] / total - ratios[k]));
        return w;
    };
    // lexicographic objective: the worst deviation decides, the sum breaks
    // plateaus where only a detour move can free the worst split later
    auto dev_score = [&]() {
        double w = 0.0, s = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double d = std::abs(assigned[k] / total - ratios[k]);
            w = std::max(w, d);
            s += d;
        }
        return std::make_pair(w, s);
    };
    auto lex_better = [](const std::pair<double, double>& a, const std::pair<double, double>& b) {
        if (a.first < b.first - 1e-12) return true;
        return a.first < b.first + 1e-12 && a.second < b.second - 1e-12;
    };

    auto covers = [&](int k, bool young) {
        for (int idx : members[k]) {
            const auto& s = subjects[idx];
            if (young ? s.has_young : s.has_old) return true;
        }
        return false;
    };

    // True when taking this subject out keeps every age group the split
    // currently covers still represented there.
    auto removable = [&](int from, int m) {
        const int idx = members[from][static_cast<size_t>(m)];
        bool young_left = false, old_left = false;
        for (int other : members[from]) {
            if (other == idx) continue;
            young_left |= subjects[other].has_young;
            old_left |= subjects[other].has_old;
        }
        return (young_left || !covers(from, true)) && (old_left || !covers(from, false));
    };

    // Greedy rebalance: keep applying the subject move or pairwise swap that
    // most reduces the worst deviation. Exact assignments (like uniform
    // manifests) are already optimal, so this pass leaves them untouched.
    const auto rebalance = [&](auto&& can_move) {
        for (int iter = 0; iter < 512; ++iter) {
            auto best = dev_score();
            int bf = -1, bm = -1, bt = -1, bn = -1; // bn < 0 marks a plain move
            for (int from = 0; from < 3; ++from) {
                for (size_t m = 0; m < members[from].size(); ++m) {
                    if (!can_move(from, static_cast<int>(m))) continue;
                    const int img = subjects[members[from][m]].images;
                    for (int to = 0; to < 3; ++to) {
                        if (to == from) continue;
                        if (members[from].size() >= 2) {
                            assigned[from] -= img;
                            assigned[to] += img;
                            const auto cand = dev_score();
                            assigned[from] += img;
                            assigned[to] -= img;
                            if (lex_better(cand, best)) {
                                best = cand;
                                bf = from;
                                bm = static_cast<int>(m);
                                bt = to;
                                bn = -1;
                            }
                        }
                        for (size_t n = 0; n < members[to].size(); ++n) {
                            const int jmg = subjects[members[to][n]].images;
                            if (jmg == img || !can_move(to, static_cast<int>(n))) continue;
                            assigned[from] += jmg - img;
                            assigned[to] += img - jmg;
                            const auto cand = dev_score();
                            assigned[from] -= jmg - img;
                            assigned[to] -= img - jmg;
                            if (lex_better(cand, best)) {
                                best = cand;
                                bf = from;
                                bm = static_cast<int>(m);
                                bt = to;
                                bn = static_cast<int>(n);
                            }
                        }
                    }
                }
            }
            if (bf < 0) break;
            const int idx = members[bf][static_cast<size_t>(bm)];
            members[bf].erase(members[bf].begin() + bm);
            assigned[bf] -= subjects[idx].images;
            if (bn >= 0) {
                const int jdx = members[bt][static_cast<size_t>(bn)];
                members[bt].erase(members[bt].begin() + bn);
                members[bf].push_back(jdx);
                assigned[bt] -= subjects[jdx].images;
                assigned[bf] += subjects[jdx].images;
            }
            members[bt].push_back(idx);
            assigned[bt] += subjects[idx].images;
        }
    };
    rebalance([](int, int) { return true; });

    // Age-group coverage. A swap keeps subject counts intact, so it is tried
    // first; otherwise the least disruptive donor moves in. Donors that would
    // lose their own split's coverage are skipped, so a fixed subject cannot
    // ping-pong between two deficient splits. The whole repair is rolled back
    // if it pushes a previously conforming assignment past the fraction bound:
    // a one-subject split simply cannot see both groups at tiny scales.
    constexpr double kMaxFracDev = 0.03;
    const auto members_before = members;
    const auto assigned_before = assigned;
    const double dev_before = worst_dev();

    for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < 3; ++k) {
            for (bool young : {true, false}) {
                if (covers(k, young)) continue;

                // swap: receiver leaves k only if k stays covered for the
                // groups it already has, counting what the donor brings in
                int sw_from = -1, sw_pos = -1, sw_recv = -1, sw_gap = 0;
                for (int from = 0; from < 3; ++from) {
                    if (from == k) continue;
                    for (size_t m = 0; m < members[from].size(); ++m) {
                        const auto& s = subjects[members[from][m]];
                        if (!(young ? s.has_young : s.has_old)) continue;
                        if (!removable(from, static_cast<int>(m))) continue;
                        for (size_t r = 0; r < members[k].size(); ++r) {
                            bool ok = true;
                            for (bool grp : {true, false}) {
                                if (!covers(k, grp)) continue;
                                if (grp ? s.has_young : s.has_old) continue;
                                bool left = false;
                                for (size_t o = 0; o < members[k].size(); ++o) {
                                    if (o == r) continue;
                                    const auto& su = subjects[members[k][o]];
                                    left |= grp ? su.has_young : su.has_old;
                                }
                                ok &= left;
                            }
                            if (!ok) continue;
                            const int gap = std::abs(s.images - subjects[members[k][r]].images);
                            if (sw_from < 0 || gap < sw_gap ||
                                (gap == sw_gap && s.id < subjects[members[sw_from][sw_pos]].id)) {
                                sw_from = from;
                                sw_pos = static_cast<int>(m);
                                sw_recv = static_cast<int>(r);
                                sw_gap = gap;
                            }
                        }
                    }
                }
                if (sw_from >= 0) {
                    const int in_idx = members[sw_from][sw_pos];
                    const int out_idx = members[k][sw_recv];
                    members[sw_from][sw_pos] = out_idx;
                    members[k][sw_recv] = in_idx;
                    assigned[sw_from] += subjects[out_idx].images - subjects[in_idx].images;
                    assigned[k] += subjects[in_idx].images - subjects[out_idx].images;
                    continue;
                }

                int best_from = -1, best_pos = -1, best_images = 0;
                for (int from = 0; from < 3; ++from) {
                    if (from == k || members[from].size() < 2) continue;
                    for (size_t m = 0; m < members[from].size(); ++m) {
                        const auto& s = subjects[members[from][m]];
                        if (!(young ? s.has_young : s.has_old)) continue;
                        if (!removable(from, static_cast<int>(m))) continue;
                        // prefer the smallest image count; break ties by id
                        if (best_from < 0 || s.images < best_images ||
                            (s.images == best_images && s.id < subjects[members[best_from][best_pos]].id)) {
                            best_from = from;
                            best_pos = static_cast<int>(m);
                            best_images = s.images;
                        }
                    }
                }
                if (best_from >= 0) {
                    const int idx = members[best_from][best_pos];
                    members[best_from].erase(members[best_from].begin() + best_pos);
                    members[k].push_back(idx);
                    assigned[best_from] -= subjects[idx].images;
                    assigned[k] += subjects[idx].images;
                }
            }
        }
    }

    // Re-tighten fractions without undoing coverage.
    rebalance(removable);

    if (dev_before <= kMaxFracDev && worst_dev() > kMaxFracDev) {
        members = members_before;
        assigned = assigned_before;
    }

    SplitAssignment out;
    std::array<std::set<std::string>*, 3> sets = {&out.train, &out.val, &out.test};
    for (int k = 0; k < 3; ++k)
        for (int idx : members[k]) sets[k]->insert(subjects[idx].id);
    return out;
}

inline void write_split(const std::string& path, const SplitAssignment& split) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write split file: " + path);
    out << "subject_id,split\n";
    for (SplitKind k : {SplitKind::Train, SplitKind::Val, SplitKind::Test})
        for (const auto& s : split.of(k)) out << s << ',' << to_string(k) << "\n";
    if (!out.flush()) throw IoError("failed writing split file: " + path);
}

inline SplitAssignment read_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read split file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty split file: " + path);
    SplitAssignment out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw ManifestParseError("split file line " + std::to_string(line_no) + ": expected 2 columns");
        if (fields[1] == "train") out.train.insert(fields[0]);
        else if (fields[1] == "val") out.val.insert(fields[0]);
        else if (fields[1] == "test") out.test.insert(fields[0]);
        else throw ManifestParseError("split file line " + std::to_string(line_no) + ": bad split '" + fields[1] + "'");
    }
    return out;
}

} // namespace ocularage
