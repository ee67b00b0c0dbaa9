#include <cstdio>

int main() {
  std::puts("mafl: placeholder");
  return 0;
}
