"""
Literacy scores, clusters and a correlation test
================================================

Score ten yes/no activity items, summarise the weighted distribution, cluster
respondents and test a correlation between two cluster-level summaries.
"""
import numpy as np

from svylasso.cohort import elbow, kmeans, literacy_score, pearson_p_value, pearson_test

rng = np.random.default_rng(0)
n = 1000
skill = rng.normal(size=n)
items = np.where(rng.random((n, 10)) < 1 / (1 + np.exp(-(skill[:, None] + rng.normal(0, 0.5, 10)))),
                 "Yes", "No").astype(object)
items[rng.random((n, 10)) < 0.005] = "Not stated"
weights = rng.choice([40.0, 120.0], size=n)

res = literacy_score(items, weights, groups={"stratum": np.where(weights > 50, "rural", "urban")})
print(res.n_complete, "complete respondents")
print(res.stats.as_dict())
print(res.group_means)

###############################################################################
# Elbow curve and silhouette for k-means on two item summaries.
M = np.column_stack([items[:, :5] == "Yes", items[:, 5:] == "Yes"]).astype(float)
M = np.column_stack([M[:, :5].mean(1), M[:, 5:].mean(1)])
print({k: round(v, 2) for k, v in elbow(M, range(1, 7), seed=1).items()})
cl = kmeans(M, 3, seed=1)
print("silhouette", round(cl.silhouette_mean, 3))

print(pearson_test(cl.centroids[:, 0], cl.centroids[:, 1]))
print("r=0.327 with 10 pairs:", round(pearson_p_value(0.327, 10), 4))
