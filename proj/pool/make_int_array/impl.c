int *make_int_array(const int *values, int count) {
  int *arr = (int *)malloc(sizeof(int) * (count > 0 ? (size_t)count : 1));
  if (arr == NULL) return NULL;
  for (int i = 0; i < count; i++) arr[i] = values[i];
  return arr;
}
