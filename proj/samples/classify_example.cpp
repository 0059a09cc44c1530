// Generates one ransomware-like and one git-like trace, then classifies both
// with the default two-stage pipeline and prints the explanation.

#include <rwprof/rwprof.hpp>

#include <iostream>

int main() {
  using namespace rwprof;

  const PipelineConfig config;
  for (auto kind : {GenKind::ransomware, GenKind::git_like}) {
    GenSpec spec;
    spec.kind = kind;
    spec.seed = 7;
    const Trace trace = generate(spec);
    const Verdict v = classify(trace, config);

    std::cout << trace.id << ": " << trace.events.size() << " events, stage-1 score "
              << *v.stage1_score << (v.stage1_positive ? " (positive)" : " (negative)");
    if (v.contrast_score) std::cout << ", contrast " << *v.contrast_score;
    std::cout << " -> " << to_string(v.final) << '\n';
    if (v.span) std::cout << "  most consistent span: " << v.span->start << "-" << v.span->end << " s\n";
    for (const auto& c : v.contributions)
      std::cout << "  " << to_string(c.set) << " " << c.api << " (" << c.calls << " calls) "
                << (c.contribution > 0 ? "+" : "") << c.contribution << '\n';
  }
}
