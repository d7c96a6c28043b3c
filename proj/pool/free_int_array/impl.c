void free_int_array(int *arr) {
  if (arr != NULL) free(arr);
}
