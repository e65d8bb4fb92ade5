#pragma once

#include <functional>
#include <string>
#include <vector>

namespace stylobf::testing {

// Macro F1 from a confusion matrix (rows: truth, columns: prediction) over
// the labels that occur in either role.
inline double confusion_macro_f1(const std::vector<std::vector<int>>& c) {
  const std::size_t k = c.size();
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t i = 0; i < k; ++i) {
    int row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += c[i][j];
      col += c[j][i];
    }
    if (row + col == 0) continue;
    ++present;
    const int tp = c[i][i];
    sum += 2.0 * tp / static_cast<double>(row + col);
  }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

// Calls fn for every k x k matrix with entries in [0, max_count].
inline void for_each_confusion(std::size_t k, int max_count, const std::function<void(const std::vector<std::vector<int>>&)>& fn) {
  std::vector<std::vector<int>> c(k, std::vector<int>(k, 0));
  const std::size_t cells = k * k;
  while (true) {
    fn(c);
    std::size_t i = 0;
    for (; i < cells; ++i) {
      int& v = c[i / k][i % k];
      if (v < max_count) {
        ++v;
        break;
      }
      v = 0;
    }
    if (i == cells) return;
  }
}

inline void confusion_to_labels(const std::vector<std::vector<int>>& c, std::vector<std::string>& truth,
                                std::vector<std::string>& pred) {
  truth.clear();
  pred.clear();
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      for (int n = 0; n < c[i][j]; ++n) {
        truth.push_back("L" + std::to_string(i));
        pred.push_back("L" + std::to_string(j));
      }
    }
  }
}

}  // namespace stylobf::testing
