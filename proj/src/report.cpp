#include "leakprobe/report.hpp"

#include "leakprobe/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace leakprobe {

namespace {

struct Column {
  std::string head;
  bool right = true;
};

std::string render_table(const std::vector<Column>& columns, const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    width[c] = columns[c].head.size();
    for (const auto& row : cells)
      width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](auto cell_at) {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c)
        out += " | ";
      std::string cell = cell_at(c);
      std::string pad(width[c] - cell.size(), ' ');
      out += (columns[c].right && c != 0) ? pad + cell : cell + pad;
    }
    while (out.ends_with(' '))
      out.pop_back();
    return out + '\n';
  };
  std::string out = line([&](std::size_t c) { return columns[c].head; });
  std::string rule;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c)
      rule += "-+-";
    rule += std::string(width[c], '-');
  }
  out += rule + '\n';
  for (const auto& row : cells)
    out += line([&](std::size_t c) { return row[c]; });
  return out;
}

std::string table_key(ResultTable t) {
  switch (t) {
  case ResultTable::context:
    return "context";
  case ResultTable::domain_unknown:
    return "domain_unknown";
  case ResultTable::domain_known:
    return "domain_known";
  }
  return "?";
}

} // namespace

ResultTable table_of(const MetricsRow& row) {
  if (row.is_context)
    return ResultTable::context;
  return row.domain_known ? ResultTable::domain_known : ResultTable::domain_unknown;
}

std::string_view table_title(ResultTable table) {
  switch (table) {
  case ResultTable::context:
    return "Results of prediction with context";
  case ResultTable::domain_unknown:
    return "Results of settings when domain is unknown";
  case ResultTable::domain_known:
    return "Results of settings when domain is known";
  }
  return "";
}

std::string render_metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "table,setting,model,n_total,n_predicted,n_correct,n_correct_star,n_no_pattern,n_failed,accuracy,"
                    "training_informed\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto table = table_of(r);
    out += csv::format_row({table_key(table), r.setting_label, r.model_id, std::to_string(r.n_total),
                            std::to_string(r.n_predicted), std::to_string(r.n_correct),
                            table == ResultTable::domain_known ? std::to_string(r.n_correct_star) : std::string{},
                            std::to_string(r.n_correct_no_pattern), std::to_string(r.n_failed), r.accuracy_text(),
                            r.training_informed ? "true" : "false"}) +
           '\n';
  }
  return out;
}

std::string render_metrics_text(std::span<const MetricsRow> rows) {
  std::string out;
  bool any_informed = false;
  for (auto table : {ResultTable::context, ResultTable::domain_unknown, ResultTable::domain_known}) {
    const bool known = table == ResultTable::domain_known;
    std::vector<Column> columns{{"setting", false}, {"model", false}, {"# predicted"}, {"# correct"}};
    if (known)
      columns.push_back({"# correct*"});
    columns.push_back({"(# no pattern)"});
    columns.push_back({"accuracy (%)"});

    std::vector<std::vector<std::string>> cells;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (table_of(r) != table)
        continue;
      std::string label = r.setting_label;
      if (r.training_informed) {
        label += " [t]";
        any_informed = true;
      }
      std::vector<std::string> row{label, r.model_id, std::to_string(r.n_predicted), std::to_string(r.n_correct)};
      if (known)
        row.push_back(std::to_string(r.n_correct_star));
      row.push_back("(" + std::to_string(r.n_correct_no_pattern) + ")");
      row.push_back(r.accuracy_text());
      cells.push_back(std::move(row));
    }
    if (cells.empty())
      continue;
    if (!out.empty())
      out += '\n';
    out += std::string(table_title(table)) + '\n';
    out += render_table(columns, cells);
  }
  if (any_informed)
    out += "\n[t] prompt shaped after text found in the training data\n";
  return out;
}

std::vector<FrequencyReportRow> frequency_rows(std::span<const NameEmailPair> dataset,
                                               std::span<const PredictionRecord> records) {
  std::vector<FrequencyReportRow> rows;
  rows.push_back({frequency_stats_all("all", dataset), false});

  std::vector<std::string> order;
  std::map<std::string, std::vector<PredictionRecord>> groups;
  for (const auto& r : records) {
    auto label = r.setting.label();
    auto [it, inserted] = groups.try_emplace(label);
    if (inserted)
      order.push_back(label);
    it->second.push_back(r);
  }
  for (const auto& label : order) {
    auto stats = frequency_stats_correct(label, groups.at(label));
    bool suppressed = stats.count < min_correct_for_frequency;
    rows.push_back({std::move(stats), suppressed});
  }
  return rows;
}

std::string render_frequency_text(std::span<const FrequencyReportRow> rows) {
  std::vector<Column> columns{{"setting", false}, {"n"}, {"mean"}, {"median"}};
  std::vector<std::vector<std::string>> cells;
  std::string notes;
  for (const auto& r : rows) {
    if (r.suppressed) {
      notes += "  " + r.stats.label + ": " + std::to_string(r.stats.count) + " correct\n";
      continue;
    }
    cells.push_back({r.stats.label, std::to_string(r.stats.count), format_mean(r.stats.mean),
                     format_median(r.stats.median)});
  }
  std::string out = "Frequency of correctly predicted addresses\n" + render_table(columns, cells);
  if (!notes.empty())
    out += "\nOmitted (fewer than " + std::to_string(min_correct_for_frequency) + " correct predictions):\n" + notes;
  return out;
}

std::string render_frequency_csv(std::span<const FrequencyReportRow> rows) {
  std::string out = "setting,n,mean,median,suppressed\n";
  for (const auto& r : rows)
    out += csv::format_row({r.stats.label, std::to_string(r.stats.count),
                            r.suppressed ? std::string{} : format_mean(r.stats.mean),
                            r.suppressed ? std::string{} : format_median(r.stats.median),
                            r.suppressed ? "true" : "false"}) +
           '\n';
  return out;
}

std::string render_drops_text(const DropCounts& drops, std::size_t kept) {
  std::ostringstream out;
  out << "Dataset construction\n"
      << "  pairs kept:                       " << kept << '\n'
      << "  roster addresses not in corpus:   " << drops.not_in_corpus << '\n'
      << "  dropped, corporate domain:        " << drops.corporate_domain << '\n'
      << "  dropped, name token count:        " << drops.name_tokens << '\n'
      << "  dropped, rare domain:             " << drops.rare_domain << '\n';
  return out.str();
}

std::string format_delta(std::int64_t hundredths) {
  char buf[48];
  const char* sign = hundredths < 0 ? "-" : "+";
  auto v = hundredths < 0 ? -hundredths : hundredths;
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", sign, static_cast<long long>(v / 100),
                static_cast<long long>(v % 100));
  return buf;
}

std::string render_comparative_text(std::span<const ComparativeRow> rows) {
  std::vector<Column> columns{{"setting", false}, {"seen (%)"}, {"unseen (%)"}, {"delta (pp)"}};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.setting_label, format_accuracy(r.seen_hundredths), format_accuracy(r.unseen_hundredths),
                     format_delta(r.delta_hundredths())});
  return "Seen vs unseen addresses\n" + render_table(columns, cells);
}

std::string render_comparative_csv(std::span<const ComparativeRow> rows) {
  std::string out = "setting,seen_accuracy,unseen_accuracy,delta_pp\n";
  for (const auto& r : rows)
    out += csv::format_row({r.setting_label, format_accuracy(r.seen_hundredths), format_accuracy(r.unseen_hundredths),
                            format_delta(r.delta_hundredths())}) +
           '\n';
  return out;
}

} // namespace leakprobe
