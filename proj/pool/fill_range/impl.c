void fill_range(int *arr, int count, int start) {
  for (int i = 0; i < count; i++) arr[i] = start + i;
}
