int int_array_equals(const int *a, const int *b, int count) {
  for (int i = 0; i < count; i++) {
    if (a[i] != b[i]) return 0;
  }
  return 1;
}
