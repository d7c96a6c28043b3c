char *dup_cstring(const char *s) {
  int n = 0;
  while (s[n] != '\0') n++;
  char *copy = (char *)malloc((size_t)n + 1);
  if (copy == NULL) return NULL;
  for (int i = 0; i <= n; i++) copy[i] = s[i];
  return copy;
}
