#include <iostream>

int main() {
  std::cout << "qoc: placeholder\n";
  return 0;
}
