int cstring_equals(const char *a, const char *b) {
  int i = 0;
  while (a[i] != '\0' && b[i] != '\0') {
    if (a[i] != b[i]) return 0;
    i++;
  }
  return a[i] == b[i];
}
