#include <citeforge/citext.hpp>

int main() {
  const auto a = citeforge::parse_cited_answer("Sky is blue [1].", 1);
  return a.citation_count() == 1 ? 0 : 1;
}
