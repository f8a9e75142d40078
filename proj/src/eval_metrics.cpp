#include "factedit/eval_metrics.hpp"

#include <algorithm>

#include "factedit/energy.hpp"
#include "factedit/error.hpp"

namespace factedit {
namespace {

using Counts = std::map<std::vector<std::string>, std::size_t>;

Counts ngrams(const TokenSequence& seq, std::size_t n) {
  Counts c;
  if (seq.size() < n) return c;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++c[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                 seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return c;
}

std::size_t total(const Counts& c) {
  std::size_t t = 0;
  for (const auto& [k, v] : c) t += v;
  return t;
}

Counts intersect(const Counts& a, const Counts& b) {
  Counts out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it != b.end()) out[k] = std::min(v, it->second);
  }
  return out;
}

Counts minus(const Counts& a, const Counts& b) {
  Counts out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    const std::size_t sub = it == b.end() ? 0 : it->second;
    if (v > sub) out[k] = v - sub;
  }
  return out;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

// F1 of a system multiset against a reference multiset.
double set_f1(const Counts& sys, const Counts& ref) {
  const std::size_t overlap = total(intersect(sys, ref));
  return f1(ratio(overlap, total(sys)), ratio(overlap, total(ref)));
}

}  // namespace

SariScore sari(const TokenSequence& source, const TokenSequence& output, const std::vector<TokenSequence>& references,
               const SariOptions& options) {
  if (references.empty()) throw Error(Errc::EmptyReference, "sari needs at least one reference");
  const std::size_t max_n = std::max<std::size_t>(1, options.max_n);

  SariScore best;
  bool first = true;
  for (const auto& ref : references) {
    double keep = 0.0, del = 0.0, add = 0.0;
    for (std::size_t n = 1; n <= max_n; ++n) {
      const Counts s = ngrams(source, n), o = ngrams(output, n), r = ngrams(ref, n);
      keep += set_f1(intersect(s, o), intersect(s, r));
      add += set_f1(minus(o, s), minus(r, s));
      del += set_f1(minus(s, o), minus(s, r));
    }
    const double k = static_cast<double>(max_n);
    if (first || keep / k > best.keep_f1) best.keep_f1 = keep / k;
    if (first || del / k > best.delete_f1) best.delete_f1 = del / k;
    if (first || add / k > best.add_f1) best.add_f1 = add / k;
    first = false;
  }
  best.final = (best.keep_f1 + best.delete_f1 + best.add_f1) / 3.0;
  return best;
}

double rouge2(const TokenSequence& output, const TokenSequence& reference) {
  const Counts o = ngrams(output, 2), r = ngrams(reference, 2);
  const std::size_t to = total(o), tr = total(r);
  if (to == 0 && tr == 0) return 1.0;
  if (to == 0 || tr == 0) return 0.0;
  const std::size_t overlap = total(intersect(o, r));
  return f1(static_cast<double>(overlap) / static_cast<double>(to), static_cast<double>(overlap) / static_cast<double>(tr));
}

CorpusReport evaluate_corpus(const std::vector<EvalInstance>& instances, const SariOptions& options) {
  CorpusReport report;
  for (const auto& inst : instances) {
    InstanceScore s;
    s.id = inst.id;
    s.sari = sari(inst.source, inst.output, inst.references, options);
    s.hamming = static_cast<double>(hamming(inst.output, inst.references.front()));
    for (const auto& ref : inst.references) {
      s.rouge2 = std::max(s.rouge2, rouge2(inst.output, ref));
      s.hamming = std::min(s.hamming, static_cast<double>(hamming(inst.output, ref)));
      s.exact_match = s.exact_match || inst.output == ref;
    }
    ++report.label_counts[inst.label.value_or("")];
    report.instances.push_back(std::move(s));
  }
  if (report.instances.empty()) return report;

  const double n = static_cast<double>(report.instances.size());
  for (const auto& s : report.instances) {
    report.mean_sari.keep_f1 += s.sari.keep_f1;
    report.mean_sari.delete_f1 += s.sari.delete_f1;
    report.mean_sari.add_f1 += s.sari.add_f1;
    report.mean_sari.final += s.sari.final;
    report.mean_rouge2 += s.rouge2;
    report.mean_hamming += s.hamming;
    report.exact_match_rate += s.exact_match ? 1.0 : 0.0;
  }
  report.mean_sari.keep_f1 /= n;
  report.mean_sari.delete_f1 /= n;
  report.mean_sari.add_f1 /= n;
  report.mean_sari.final /= n;
  report.mean_rouge2 /= n;
  report.mean_hamming /= n;
  report.exact_match_rate /= n;
  return report;
}

}  // namespace factedit
