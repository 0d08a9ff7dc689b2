/* 32-bit factorial; wraps on overflow. Recursive form keeps n itself
 * flowing through every multiply. */
int fac(int n) {
    return n < 2 ? 1 : n * fac(n - 1);
}
