#include <benchmark/benchmark.h>

// the distro's libbenchmark_main.a ships stale LTO bytecode, so the main
// lives here
BENCHMARK_MAIN();
