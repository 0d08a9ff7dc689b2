/* Heap-traffic kernels: fill stores one value across a block, sum folds it
 * back. Pointers are raw linear-memory offsets. */
void fill(int *p, int n, int v) {
    for (int i = 0; i < n; i++) {
        p[i] = v;
    }
}

int sum(int *p, int n) {
    int s = 0;
    for (int i = 0; i < n; i++) {
        s += p[i];
    }
    return s;
}
