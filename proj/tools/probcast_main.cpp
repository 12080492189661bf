#include "probcast/probcast.hpp"
int main() { return 0; }
